#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dynidx/bitset.hpp"
#include "dynidx/error.hpp"
#include "dynidx/schema.hpp"
#include "dynidx/workload.hpp"

namespace dynidx {

using ItemId = std::uint32_t;

// Append-only bijection between dense item ids and attribute identities.
class ItemDictionary {
 public:
  ItemId intern(const AttributeRef& attr) {
    if (auto it = index_.find(attr); it != index_.end()) return it->second;
    const auto id = static_cast<ItemId>(items_.size());
    items_.push_back(attr);
    index_.emplace(attr, id);
    return id;
  }

  std::optional<ItemId> find(const AttributeRef& attr) const {
    if (auto it = index_.find(attr); it != index_.end()) return it->second;
    return std::nullopt;
  }

  const AttributeRef& attribute(ItemId id) const {
    if (id >= items_.size()) throw ValidationError("unknown item id " + std::to_string(id));
    return items_[id];
  }

  std::size_t size() const noexcept { return items_.size(); }
  const std::vector<AttributeRef>& items() const noexcept { return items_; }

  // True when `prefix` is an initial segment of this dictionary.
  bool extends(const ItemDictionary& prefix) const {
    return prefix.items_.size() <= items_.size() &&
           std::equal(prefix.items_.begin(), prefix.items_.end(), items_.begin());
  }

  bool operator==(const ItemDictionary& other) const { return items_ == other.items_; }

 private:
  std::vector<AttributeRef> items_;
  std::map<AttributeRef, ItemId> index_;
};

struct Transaction {
  std::string id;
  std::vector<ItemId> items;  // sorted ascending, unique
  std::uint64_t weight = 1;
  Bitset bits;                // same items, fixed-width row form

  bool operator==(const Transaction& o) const { return id == o.id && items == o.items && weight == o.weight; }
};

inline Transaction make_transaction(std::string id, std::vector<ItemId> items, std::uint64_t weight) {
  if (weight == 0) throw ValidationError("transaction '" + id + "' has zero weight");
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  Transaction t{std::move(id), std::move(items), weight, {}};
  for (ItemId i : t.items) t.bits.set(i);
  return t;
}

struct DeltaBatch {
  WorkloadBatch added;                  // d+
  std::set<std::string> removed_ids;    // d-
};

// The query-attribute context: one row per query, one column per indexable
// attribute. Rows are shared between versions; each version also carries the
// vertical form (per-item row bitsets) used by the miner.
class TransactionDatabase {
 public:
  using Row = std::shared_ptr<const Transaction>;

  TransactionDatabase() = default;
  explicit TransactionDatabase(ItemDictionary dictionary) : dictionary_(std::move(dictionary)) {}

  TransactionDatabase(ItemDictionary dictionary, std::vector<Transaction> rows) : dictionary_(std::move(dictionary)) {
    rows_.reserve(rows.size());
    for (auto& t : rows) rows_.push_back(std::make_shared<const Transaction>(std::move(t)));
    finalize();
  }

  const ItemDictionary& dictionary() const noexcept { return dictionary_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::uint64_t total_weight() const noexcept { return total_weight_; }
  bool unit_weights() const noexcept { return unit_weights_; }

  // Rows (by position) containing item `id`.
  const Bitset& tids(ItemId id) const {
    static const Bitset kEmpty;
    return id < vertical_.size() ? vertical_[id] : kEmpty;
  }

  std::vector<std::uint64_t> weights() const {
    std::vector<std::uint64_t> w;
    w.reserve(rows_.size());
    for (const auto& r : rows_) w.push_back(r->weight);
    return w;
  }

  bool contains(const std::string& id) const { return positions_.contains(id); }

  // Sum of row weights over the set bits of `rows`.
  std::uint64_t weight_of(const Bitset& rows) const {
    if (unit_weights_) return rows.count();
    std::uint64_t total = 0;
    rows.for_each([&](std::size_t r) { total += rows_[r]->weight; });
    return total;
  }

  // Equality as a set of transactions, plus identical dictionaries.
  friend bool same_contents(const TransactionDatabase& a, const TransactionDatabase& b) {
    if (!(a.dictionary_ == b.dictionary_) || a.rows_.size() != b.rows_.size()) return false;
    for (const auto& r : a.rows_) {
      auto it = b.positions_.find(r->id);
      if (it == b.positions_.end() || !(*b.rows_[it->second] == *r)) return false;
    }
    return true;
  }

 private:
  friend TransactionDatabase build_context(const WorkloadBatch&, ItemDictionary);
  friend TransactionDatabase apply_delta(const TransactionDatabase&, const DeltaBatch&, std::vector<std::string>*);

  void finalize() {
    positions_.clear();
    vertical_.assign(dictionary_.size(), Bitset(rows_.size()));
    total_weight_ = 0;
    unit_weights_ = true;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Transaction& t = *rows_[r];
      if (!positions_.emplace(t.id, r).second) throw ValidationError("duplicate transaction id '" + t.id + "'");
      for (ItemId i : t.items) {
        if (i >= dictionary_.size()) {
          throw ValidationError("transaction '" + t.id + "' references unknown item id " + std::to_string(i));
        }
        vertical_[i].set(r);
      }
      total_weight_ += t.weight;
      unit_weights_ = unit_weights_ && t.weight == 1;
    }
  }

  ItemDictionary dictionary_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> positions_;
  std::vector<Bitset> vertical_;
  std::uint64_t total_weight_ = 0;
  bool unit_weights_ = true;
};

namespace detail {

inline Transaction to_transaction(const AnalyticalQuery& q, ItemDictionary& dictionary) {
  std::vector<ItemId> items;
  for (const auto& attr : extract_indexable(q)) items.push_back(dictionary.intern(attr));
  return make_transaction(q.id, std::move(items), q.weight);
}

}  // namespace detail

// One transaction per query; unseen attributes are appended to the dictionary
// in (query order, attribute order).
inline TransactionDatabase build_context(const WorkloadBatch& batch, ItemDictionary dictionary) {
  TransactionDatabase db(std::move(dictionary));
  db.rows_.reserve(batch.queries.size());
  for (const auto& q : batch.queries) {
    db.rows_.push_back(std::make_shared<const Transaction>(detail::to_transaction(q, db.dictionary_)));
  }
  db.finalize();
  return db;
}

// (D ∪ d+) − d-. Retained rows keep their order, added rows follow. Removal
// ids absent from D are reported through `warnings` and otherwise ignored.
inline TransactionDatabase apply_delta(const TransactionDatabase& database, const DeltaBatch& delta,
                                       std::vector<std::string>* warnings = nullptr) {
  for (const auto& q : delta.added.queries) {
    if (delta.removed_ids.contains(q.id)) {
      throw ValidationError("transaction '" + q.id + "' is both added and removed");
    }
  }
  for (const auto& id : delta.removed_ids) {
    if (!database.contains(id) && warnings != nullptr) {
      warnings->push_back("removed id '" + id + "' is not in the transaction database");
    }
  }

  TransactionDatabase out(database.dictionary());
  out.rows_.reserve(database.size() + delta.added.queries.size());
  for (const auto& row : database.rows()) {
    if (!delta.removed_ids.contains(row->id)) out.rows_.push_back(row);
  }
  std::unordered_set<std::string> retained;
  for (const auto& row : out.rows_) retained.insert(row->id);
  for (const auto& q : delta.added.queries) {
    if (retained.contains(q.id)) {
      throw ValidationError("added transaction '" + q.id + "' collides with a retained transaction");
    }
    out.rows_.push_back(std::make_shared<const Transaction>(detail::to_transaction(q, out.dictionary_)));
  }
  out.finalize();
  return out;
}

// Total weight of transactions containing every item of `items`.
inline std::uint64_t support(const TransactionDatabase& database, const std::vector<ItemId>& items) {
  for (ItemId i : items) {
    if (i >= database.dictionary().size()) throw ValidationError("unknown item id " + std::to_string(i));
  }
  if (items.empty()) return database.total_weight();
  Bitset rows = database.tids(items.front());
  for (std::size_t k = 1; k < items.size(); ++k) rows = rows & database.tids(items[k]);
  return database.weight_of(rows);
}

}  // namespace dynidx
