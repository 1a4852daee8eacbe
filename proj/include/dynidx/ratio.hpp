#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "dynidx/error.hpp"

namespace dynidx {

// Exact non-negative rational built from decimal literals such as "0.05".
// Thresholds derived from it (ceil(r * n)) are computed in integer arithmetic.
class Ratio {
 public:
  constexpr Ratio() = default;
  Ratio(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw ValidationError("ratio with zero denominator");
    reduce();
  }

  static Ratio parse(std::string_view text) {
    if (text.empty()) throw ParseError("empty decimal literal");
    std::uint64_t num = 0;
    std::uint64_t den = 1;
    bool seen_point = false;
    bool seen_digit = false;
    std::size_t i = 0;
    if (text[0] == '+') ++i;
    for (; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '.' && !seen_point) {
        seen_point = true;
        continue;
      }
      if (c == 'e' || c == 'E') return parse_exponent(text, i, num, den, seen_digit);
      if (c < '0' || c > '9') throw ParseError("invalid decimal literal '" + std::string(text) + "'");
      seen_digit = true;
      if (num > (UINT64_MAX - 9) / 10 || (seen_point && den > UINT64_MAX / 10)) {
        throw ParseError("decimal literal '" + std::string(text) + "' has too many digits");
      }
      num = num * 10 + static_cast<std::uint64_t>(c - '0');
      if (seen_point) den *= 10;
    }
    if (!seen_digit) throw ParseError("invalid decimal literal '" + std::string(text) + "'");
    return Ratio(num, den);
  }

  // Uses the shortest round-trip decimal form, so 0.05 becomes exactly 1/20.
  static Ratio from_double(double value) {
    if (!(value >= 0.0)) throw ValidationError("ratio must be non-negative");
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw ValidationError("cannot format ratio");
    return parse(std::string_view(buf, static_cast<std::size_t>(end - buf)));
  }

  std::uint64_t num() const noexcept { return num_; }
  std::uint64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  // ceil(this * n), exact.
  std::uint64_t ceil_mul(std::uint64_t n) const {
    const unsigned __int128 prod = static_cast<unsigned __int128>(num_) * n;
    const unsigned __int128 q = (prod + den_ - 1) / den_;
    if (q > UINT64_MAX) throw ValidationError("ratio product overflows");
    return static_cast<std::uint64_t>(q);
  }

  bool is_zero() const noexcept { return num_ == 0; }

  friend bool operator==(const Ratio& a, const Ratio& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend bool operator<(const Ratio& a, const Ratio& b) {
    return static_cast<unsigned __int128>(a.num_) * b.den_ < static_cast<unsigned __int128>(b.num_) * a.den_;
  }
  friend bool operator<=(const Ratio& a, const Ratio& b) { return !(b < a); }

  std::string to_string() const { return std::to_string(num_) + "/" + std::to_string(den_); }

 private:
  static Ratio parse_exponent(std::string_view text, std::size_t at, std::uint64_t num, std::uint64_t den,
                              bool seen_digit) {
    if (!seen_digit) throw ParseError("invalid decimal literal '" + std::string(text) + "'");
    int exp = 0;
    std::string_view rest = text.substr(at + 1);
    if (!rest.empty() && rest[0] == '+') rest.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exp);
    if (ec != std::errc{} || ptr != rest.data() + rest.size()) {
      throw ParseError("invalid decimal literal '" + std::string(text) + "'");
    }
    for (; exp > 0; --exp) {
      if (num > UINT64_MAX / 10) throw ParseError("decimal literal out of range");
      num *= 10;
    }
    for (; exp < 0; ++exp) {
      if (den > UINT64_MAX / 10) throw ParseError("decimal literal out of range");
      den *= 10;
    }
    return Ratio(num, den);
  }

  void reduce() {
    const std::uint64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

}  // namespace dynidx
