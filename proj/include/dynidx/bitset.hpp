#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dynidx {

// Growable bit vector. Used horizontally (items of a transaction) and
// vertically (rows containing an item).
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t bits) : words_((bits + 63) / 64, 0) {}

  std::size_t word_count() const noexcept { return words_.size(); }
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  void set(std::size_t bit) {
    const std::size_t w = bit / 64;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= std::uint64_t{1} << (bit % 64);
  }

  bool test(std::size_t bit) const noexcept {
    const std::size_t w = bit / 64;
    return w < words_.size() && ((words_[w] >> (bit % 64)) & 1u) != 0;
  }

  bool none() const noexcept {
    for (auto w : words_)
      if (w != 0) return false;
    return true;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  // this ⊆ other
  bool is_subset_of(const Bitset& other) const noexcept {
    const std::size_t n = words_.size();
    const std::size_t m = other.words_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t o = i < m ? other.words_[i] : 0;
      if ((words_[i] & ~o) != 0) return false;
    }
    return true;
  }

  Bitset& operator|=(const Bitset& other) {
    if (other.words_.size() > words_.size()) words_.resize(other.words_.size(), 0);
    for (std::size_t i = 0; i < other.words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }

  friend Bitset operator&(const Bitset& a, const Bitset& b) {
    Bitset out;
    const std::size_t n = a.words_.size() < b.words_.size() ? a.words_.size() : b.words_.size();
    out.words_.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.words_[i] = a.words_[i] & b.words_[i];
    return out;
  }

  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w != 0) {
        f(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
  }

  friend bool operator==(const Bitset& a, const Bitset& b) noexcept {
    const auto& l = a.words_.size() >= b.words_.size() ? a.words_ : b.words_;
    const auto& s = a.words_.size() >= b.words_.size() ? b.words_ : a.words_;
    for (std::size_t i = 0; i < l.size(); ++i)
      if (l[i] != (i < s.size() ? s[i] : 0)) return false;
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
};

}  // namespace dynidx
