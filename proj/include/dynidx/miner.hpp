#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "dynidx/bitset.hpp"
#include "dynidx/context.hpp"
#include "dynidx/error.hpp"
#include "dynidx/ratio.hpp"
#include "dynidx/time.hpp"

namespace dynidx {

// Sorted, duplicate-free item ids. Equality and ordering ignore `support`.
struct Itemset {
  std::vector<ItemId> items;
  std::uint64_t support = 0;

  friend bool operator==(const Itemset& a, const Itemset& b) { return a.items == b.items; }
  friend auto operator<=>(const Itemset& a, const Itemset& b) { return a.items <=> b.items; }
};

// Canonical family of itemsets: sorted by items, no duplicates.
using ItemsetFamily = std::vector<Itemset>;

inline void canonicalize(ItemsetFamily& family) {
  for (auto& s : family) {
    std::sort(s.items.begin(), s.items.end());
    s.items.erase(std::unique(s.items.begin(), s.items.end()), s.items.end());
  }
  std::stable_sort(family.begin(), family.end());
  family.erase(std::unique(family.begin(), family.end()), family.end());
}

// a ⊆ b for sorted id vectors
inline bool is_subset(const std::vector<ItemId>& a, const std::vector<ItemId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool subset_of_any(const std::vector<ItemId>& x, const ItemsetFamily& family) {
  return std::any_of(family.begin(), family.end(), [&](const Itemset& m) { return is_subset(x, m.items); });
}

inline bool contains(const ItemsetFamily& family, const std::vector<ItemId>& items) {
  return std::binary_search(family.begin(), family.end(), Itemset{items, 0});
}

// Item-and-support equality of two canonical families.
inline bool identical(const ItemsetFamily& a, const ItemsetFamily& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].items != b[i].items || a[i].support != b[i].support) return false;
  return true;
}

inline bool is_antichain(const ItemsetFamily& family) {
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = 0; j < family.size(); ++j)
      if (i != j && is_subset(family[i].items, family[j].items)) return false;
  return true;
}

struct MiningParameters {
  Ratio minsup{1, 20};

  void validate() const {
    if (minsup.is_zero() || Ratio(1, 1) < minsup) {
      throw ValidationError("minsup must lie in (0, 1], got " + minsup.to_string());
    }
  }

  // ceil(minsup × total_weight), clamped to at least 1.
  std::uint64_t threshold(std::uint64_t total_weight) const {
    return std::max<std::uint64_t>(1, minsup.ceil_mul(total_weight));
  }
};

namespace detail {

// Depth-first maximal-itemset search over the vertical context:
//  * extensions at each level are the frequent combinations of the current
//    prefix with items to its right, reordered by ascending support;
//  * a branch is abandoned when prefix ∪ {x} ∪ remaining-extensions is
//    contained in a known maximal set (and the rest of the level with it);
//  * known maximal sets are focused per branch to those containing the
//    prefix, so superset checks only scan relevant candidates.
class MaximalMiner {
 public:
  MaximalMiner(const TransactionDatabase& db, std::uint64_t threshold)
      : db_(db), threshold_(threshold), singles_(db.dictionary().size()) {
    for (std::size_t i = 0; i < singles_.size(); ++i) singles_[i].set(i);
  }

  // Seeds must be frequent in the database; they prime the pruning set.
  void seed(const Itemset& itemset) {
    Bitset bits;
    for (ItemId i : itemset.items) bits.set(i);
    found_.push_back({std::move(bits), itemset.items, itemset.support});
    seed_count_ = found_.size();
  }

  ItemsetFamily run() {
    std::vector<Extension> root;
    const std::size_t n = db_.dictionary().size();
    for (ItemId i = 0; i < n; ++i) {
      const std::uint64_t s = db_.weight_of(db_.tids(i));
      if (s >= threshold_) root.push_back({i, db_.tids(i), s});
    }
    std::stable_sort(root.begin(), root.end(),
                     [](const Extension& a, const Extension& b) { return a.support < b.support; });

    std::vector<std::uint32_t> local(found_.size());
    for (std::uint32_t k = 0; k < local.size(); ++k) local[k] = k;
    std::vector<ItemId> prefix;
    if (!root.empty()) backtrack(prefix, Bitset{}, root, local);

    // Mined sets are never subsets of earlier entries; only a seed can be
    // superseded, and only by a set mined in this run.
    ItemsetFamily out;
    for (std::size_t i = 0; i < found_.size(); ++i) {
      bool dominated = false;
      if (i < seed_count_) {
        for (std::size_t j = seed_count_; j < found_.size() && !dominated; ++j) {
          dominated = found_[i].bits.is_subset_of(found_[j].bits);
        }
      }
      if (!dominated) out.push_back({found_[i].items, found_[i].support});
    }
    canonicalize(out);
    return out;
  }

 private:
  struct Extension {
    ItemId item;
    Bitset rows;
    std::uint64_t support;
  };

  struct Found {
    Bitset bits;
    std::vector<ItemId> items;
    std::uint64_t support;
  };

  bool covered(const Bitset& bits, const std::vector<std::uint32_t>& local) const {
    for (std::uint32_t k : local)
      if (bits.is_subset_of(found_[k].bits)) return true;
    return false;
  }

  void backtrack(std::vector<ItemId>& prefix, const Bitset& prefix_bits, const std::vector<Extension>& candidates,
                 std::vector<std::uint32_t>& local) {
    const std::size_t n = candidates.size();
    std::vector<Bitset> tail(n + 1);
    tail[n] = prefix_bits;
    for (std::size_t i = n; i-- > 0;) tail[i] = tail[i + 1] | singles_[candidates[i].item];

    for (std::size_t i = 0; i < n; ++i) {
      if (covered(tail[i], local)) return;

      const Extension& x = candidates[i];
      std::vector<Extension> next;
      for (std::size_t j = i + 1; j < n; ++j) {
        Bitset rows = x.rows & candidates[j].rows;
        const std::uint64_t s = db_.weight_of(rows);
        if (s >= threshold_) next.push_back({candidates[j].item, std::move(rows), s});
      }
      std::stable_sort(next.begin(), next.end(),
                       [](const Extension& a, const Extension& b) { return a.support < b.support; });

      Bitset bits = prefix_bits | singles_[x.item];
      std::vector<std::uint32_t> focused;
      for (std::uint32_t k : local)
        if (found_[k].bits.test(x.item)) focused.push_back(k);

      prefix.push_back(x.item);
      if (next.empty()) {
        if (focused.empty()) {
          local.push_back(static_cast<std::uint32_t>(found_.size()));
          found_.push_back({std::move(bits), prefix, x.support});
        }
      } else {
        Bitset reach = bits;
        for (const auto& e : next) reach |= singles_[e.item];
        if (!covered(reach, focused)) {
          const std::size_t before = found_.size();
          backtrack(prefix, bits, next, focused);
          for (std::size_t k = before; k < found_.size(); ++k) local.push_back(static_cast<std::uint32_t>(k));
        }
      }
      prefix.pop_back();
    }
  }

  const TransactionDatabase& db_;
  std::uint64_t threshold_;
  std::vector<Bitset> singles_;
  std::vector<Found> found_;
  std::size_t seed_count_ = 0;
};

}  // namespace detail

// All maximal frequent itemsets at threshold ceil(minsup × total_weight).
// The empty itemset is never reported.
inline ItemsetFamily mine_maximal(const TransactionDatabase& database, const MiningParameters& parameters) {
  parameters.validate();
  detail::MaximalMiner miner(database, parameters.threshold(database.total_weight()));
  return miner.run();
}

// Exhaustive reference: enumerates every subset of the item universe.
inline ItemsetFamily brute_force_maximal(const TransactionDatabase& database, const MiningParameters& parameters,
                                         std::size_t guard = 20) {
  parameters.validate();
  const std::size_t n = database.dictionary().size();
  if (n > guard) {
    throw ValidationError("brute force limited to " + std::to_string(guard) + " items, dictionary has " +
                          std::to_string(n));
  }
  const std::uint64_t threshold = parameters.threshold(database.total_weight());
  std::vector<std::uint32_t> masks;
  std::vector<std::uint64_t> weights;
  for (const auto& row : database.rows()) {
    std::uint32_t m = 0;
    for (ItemId i : row->items) m |= 1u << i;
    masks.push_back(m);
    weights.push_back(row->weight);
  }
  const std::uint32_t universe = n == 0 ? 0 : static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
  std::vector<std::uint64_t> supports(static_cast<std::size_t>(universe) + 1, 0);
  for (std::uint32_t s = 1; s != 0 && s <= universe; ++s) {
    std::uint64_t total = 0;
    for (std::size_t r = 0; r < masks.size(); ++r)
      if ((masks[r] & s) == s) total += weights[r];
    supports[s] = total;
  }
  ItemsetFamily out;
  for (std::uint32_t s = 1; s != 0 && s <= universe; ++s) {
    if (supports[s] < threshold) continue;
    bool maximal = true;
    for (std::size_t j = 0; j < n && maximal; ++j) {
      const std::uint32_t bit = 1u << j;
      if ((s & bit) == 0 && supports[s | bit] >= threshold) maximal = false;
    }
    if (!maximal) continue;
    Itemset it;
    for (std::size_t j = 0; j < n; ++j)
      if (s & (1u << j)) it.items.push_back(static_cast<ItemId>(j));
    it.support = supports[s];
    out.push_back(std::move(it));
  }
  canonicalize(out);
  return out;
}

struct MiningOutcome {
  ItemsetFamily emerged;   // I+
  ItemsetFamily declined;  // I-
  ItemsetFamily retained;  // I0
  ItemsetFamily new_maximal;
};

// An itemset is frequent iff it is contained in some maximal frequent itemset,
// so every test here is a subset check against a maximal family.
inline MiningOutcome classify(const ItemsetFamily& old_maximal, const ItemsetFamily& new_maximal,
                              const ItemsetFamily& current_index_itemsets = {}) {
  MiningOutcome out;
  out.new_maximal = new_maximal;
  canonicalize(out.new_maximal);
  for (const auto& m : out.new_maximal) {
    (subset_of_any(m.items, old_maximal) ? out.retained : out.emerged).push_back(m);
  }
  for (const auto* family : {&old_maximal, &current_index_itemsets}) {
    for (const auto& x : *family) {
      if (!subset_of_any(x.items, out.new_maximal)) out.declined.push_back(x);
    }
  }
  canonicalize(out.declined);
  return out;
}

// Persistent mining state: the current database D and its maximal family.
struct KnowledgeBase {
  MiningParameters parameters;
  TransactionDatabase database;
  ItemsetFamily maximal;
  std::uint64_t version = 0;
  std::string created_at;
  std::string updated_at;

  const ItemDictionary& dictionary() const noexcept { return database.dictionary(); }
  std::uint64_t transaction_weight() const noexcept { return database.total_weight(); }
};

inline KnowledgeBase empty_knowledge_base(MiningParameters parameters) {
  parameters.validate();
  KnowledgeBase kb;
  kb.parameters = parameters;
  kb.created_at = kb.updated_at = utc_timestamp();
  return kb;
}

// Throws InvariantViolation naming the first violated invariant.
inline void check_invariants(const KnowledgeBase& kb) {
  try {
    kb.parameters.validate();
  } catch (const ValidationError& e) {
    throw InvariantViolation(std::string("minsup range: ") + e.what());
  }
  const std::uint64_t threshold = kb.parameters.threshold(kb.transaction_weight());
  for (const auto& m : kb.maximal) {
    if (m.items.empty()) throw InvariantViolation("maximal itemset invariant: empty itemset");
    if (!std::is_sorted(m.items.begin(), m.items.end()) ||
        std::adjacent_find(m.items.begin(), m.items.end()) != m.items.end()) {
      throw InvariantViolation("itemset invariant: items must be sorted and unique");
    }
    for (ItemId i : m.items) {
      if (i >= kb.dictionary().size()) {
        throw InvariantViolation("dictionary invariant: unknown item id " + std::to_string(i));
      }
    }
    if (m.support < threshold) {
      throw InvariantViolation("threshold invariant: maximal itemset support " + std::to_string(m.support) +
                               " below threshold " + std::to_string(threshold));
    }
    if (support(kb.database, m.items) != m.support) {
      throw InvariantViolation("support invariant: stored support " + std::to_string(m.support) +
                               " does not match the transaction database");
    }
  }
  if (!is_antichain(kb.maximal)) {
    throw InvariantViolation("antichain invariant: a maximal itemset is a subset of another");
  }
}

namespace detail {

// Previous maximal sets still frequent in `database` prime the pruning set.
inline ItemsetFamily mine_seeded(const TransactionDatabase& database, std::uint64_t threshold,
                                 const ItemsetFamily& previous) {
  MaximalMiner miner(database, threshold);
  for (const auto& m : previous) {
    const std::uint64_t s = support(database, m.items);
    if (s >= threshold) miner.seed({m.items, s});
  }
  return miner.run();
}

}  // namespace detail

struct IncrementalResult {
  MiningOutcome outcome;
  KnowledgeBase knowledge_base;
  std::vector<std::string> warnings;
};

// Δ = (D ∪ d+) − d-, mined with the previous maximal family (re-validated
// against Δ) seeding the pruning set. Result-equivalent to mine_maximal(Δ).
inline IncrementalResult mine_incremental(const KnowledgeBase& kb, const DeltaBatch& delta,
                                          const ItemsetFamily& current_index_itemsets = {}) {
  IncrementalResult result;
  TransactionDatabase next = apply_delta(kb.database, delta, &result.warnings);
  const std::uint64_t threshold = kb.parameters.threshold(next.total_weight());

  ItemsetFamily new_maximal = detail::mine_seeded(next, threshold, kb.maximal);

  result.outcome = classify(kb.maximal, new_maximal, current_index_itemsets);
  KnowledgeBase& out = result.knowledge_base;
  out.parameters = kb.parameters;
  out.database = std::move(next);
  out.maximal = std::move(new_maximal);
  out.version = kb.version + 1;
  out.created_at = kb.created_at;
  out.updated_at = utc_timestamp();
  return result;
}

}  // namespace dynidx
