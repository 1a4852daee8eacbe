#pragma once

// Page-based cost estimates for bitmap join indexes over a star schema.
//
// Model summary (uniform values, independent predicates):
//   size(X)        = Π_{a∈X} |dom(a)| × ceil(|F| / 8) bytes, one bitmap per value combination
//   unindexed(q)   = pages(F) + Σ_{D joined} pages(D)
//   indexed(q, X)  = bitmap pages + cardenas(pages(F), ceil(s × |F|)) + residual dimension pages
//   maintenance(X) = μ × size(X) / page_size
//   workload(C)    = Σ_q w(q) × min(unindexed(q), min_{X∈C usable} indexed(q, X)) + Σ_{X∈C} maintenance(X)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dynidx/error.hpp"
#include "dynidx/ratio.hpp"
#include "dynidx/schema.hpp"
#include "dynidx/workload.hpp"

namespace dynidx {

struct CostParameters {
  Ratio maintenance_coefficient{1, 10};
  Ratio between_fraction{1, 10};
  std::uint64_t bitmap_limit = std::uint64_t{1} << 20;

  void validate() const {
    if (between_fraction.is_zero() || Ratio(1, 1) < between_fraction) {
      throw ValidationError("between_fraction must lie in (0, 1]");
    }
    if (bitmap_limit == 0) throw ValidationError("bitmap_limit must be >= 1");
  }
};

struct CostEstimate {
  double pages = 0.0;

  friend auto operator<=>(const CostEstimate&, const CostEstimate&) = default;
};

// Number of composite bitmaps: Π distinct_values. Throws InfeasibleIndex past bitmap_limit.
inline std::uint64_t bitmap_count(const AttributeSet& itemset, const StarSchema& schema,
                                  const CostParameters& params = {}) {
  std::uint64_t c = 1;
  for (const auto& a : itemset) {
    if (!schema.is_dimension_attribute(a)) {
      throw ValidationError("'" + a.to_string() + "' is not a dimension attribute");
    }
    const std::uint64_t d = schema.attribute(a).distinct_values;
    if (d > params.bitmap_limit || c > params.bitmap_limit / d) {
      throw InfeasibleIndex("index on " + std::to_string(itemset.size()) + " attribute(s) needs more than " +
                            std::to_string(params.bitmap_limit) + " bitmaps");
    }
    c *= d;
  }
  return c;
}

// Bytes: one |F|-bit bitmap per distinct value combination.
inline std::uint64_t index_size(const AttributeSet& itemset, const StarSchema& schema,
                                const CostParameters& params = {}) {
  const std::uint64_t c = bitmap_count(itemset, schema, params);
  const std::uint64_t bitmap_bytes = (schema.fact.row_count + 7) / 8;
  const unsigned __int128 size = static_cast<unsigned __int128>(c) * bitmap_bytes;
  if (size > std::numeric_limits<std::uint64_t>::max()) throw InfeasibleIndex("index size overflows");
  return static_cast<std::uint64_t>(size);
}

// Cardenas: expected distinct pages touched by k random row fetches over m pages.
inline double cardenas_pages(std::uint64_t total_pages, std::uint64_t fetched_rows) {
  if (total_pages == 0) throw ValidationError("cardenas_pages needs at least one page");
  if (fetched_rows == 0) return 0.0;
  if (fetched_rows == 1) return 1.0;
  const double m = static_cast<double>(total_pages);
  if (total_pages == 1) return 1.0;
  const double v = -m * std::expm1(static_cast<double>(fetched_rows) * std::log1p(-1.0 / m));
  return std::min(v, m);
}

inline CostEstimate query_cost_unindexed(const AnalyticalQuery& query, const StarSchema& schema) {
  std::uint64_t pages = page_count(schema.fact, schema.page_size);
  for (const auto& dim : query.joined_dimensions) {
    const TableStats* d = schema.dimension(dim);
    if (d == nullptr) throw ResolutionError("query references unknown dimension '" + dim + "'");
    pages += page_count(*d, schema.page_size);
  }
  return {static_cast<double>(pages)};
}

namespace detail {

using boost::multiprecision::cpp_int;

// Restriction strength per attribute: the most selective predicate wins when
// an attribute is restricted more than once. Counts are clamped to the domain.
struct Restriction {
  Ratio fraction;                  // value_count / distinct_values
  std::uint64_t bitmaps_read = 1;  // bitmaps scanned for this attribute
};

inline std::map<AttributeRef, Restriction> restrictions_of(const AnalyticalQuery& query, const StarSchema& schema,
                                                           const CostParameters& params) {
  std::map<AttributeRef, Restriction> out;
  for (const auto& r : query.restrictions) {
    const std::uint64_t dv = schema.attribute(r.attribute).distinct_values;
    Restriction cur;
    if (r.kind == PredicateKind::between) {
      cur.fraction = params.between_fraction;
      cur.bitmaps_read = std::max<std::uint64_t>(1, params.between_fraction.ceil_mul(dv));
    } else {
      const std::uint64_t vc = std::min(r.value_count, dv);
      cur.fraction = Ratio(vc, dv);
      cur.bitmaps_read = vc;
    }
    auto [it, inserted] = out.emplace(r.attribute, cur);
    if (!inserted && cur.fraction < it->second.fraction) it->second = cur;
  }
  return out;
}

inline bool usable(const AnalyticalQuery& query, const AttributeSet& itemset) {
  const AttributeSet indexable = extract_indexable(query);
  return std::includes(indexable.begin(), indexable.end(), itemset.begin(), itemset.end());
}

}  // namespace detail

inline bool is_usable(const AnalyticalQuery& query, const AttributeSet& itemset) {
  return !itemset.empty() && detail::usable(query, itemset);
}

inline CostEstimate query_cost_indexed(const AnalyticalQuery& query, const AttributeSet& itemset,
                                       const StarSchema& schema, const CostParameters& params = {}) {
  if (!is_usable(query, itemset)) throw NotUsable("index itemset is not usable by query '" + query.id + "'");
  const auto restricted = detail::restrictions_of(query, schema, params);

  // s = Π fraction over restricted attributes covered by the index; k = ceil(s × |F|) exactly.
  detail::cpp_int num = schema.fact.row_count;
  detail::cpp_int den = 1;
  std::uint64_t bitmaps = 0;
  for (const auto& a : itemset) {
    auto it = restricted.find(a);
    if (it == restricted.end()) continue;
    num *= it->second.fraction.num();
    den *= it->second.fraction.den();
    bitmaps += it->second.bitmaps_read;
  }
  const detail::cpp_int k_big = (num + den - 1) / den;
  const auto k = static_cast<std::uint64_t>(k_big);

  const std::uint64_t bitmap_pages =
      (schema.fact.row_count + 8 * schema.page_size - 1) / (8 * schema.page_size);
  double pages = static_cast<double>(bitmaps) * static_cast<double>(bitmap_pages);

  const std::uint64_t fact_pages = page_count(schema.fact, schema.page_size);
  if (fact_pages > 0) pages += cardenas_pages(fact_pages, k);

  // Dimensions still read: those grouped on, or restricted outside the index.
  std::set<std::string> residual;
  for (const auto& g : query.grouping) residual.insert(g.table);
  for (const auto& [attr, r] : restricted) {
    if (!itemset.contains(attr)) residual.insert(attr.table);
  }
  for (const auto& dim : residual) {
    const TableStats* d = schema.dimension(dim);
    if (d == nullptr) throw ResolutionError("query references unknown dimension '" + dim + "'");
    pages += static_cast<double>(page_count(*d, schema.page_size));
  }
  return {pages};
}

inline CostEstimate maintenance_cost(const AttributeSet& itemset, const StarSchema& schema,
                                     const CostParameters& params = {}) {
  const double size = static_cast<double>(index_size(itemset, schema, params));
  return {params.maintenance_coefficient.to_double() * size / static_cast<double>(schema.page_size)};
}

// Per-query and per-index costs evaluated once; workload cost of any subset of
// the indexes is then a cheap combination. Indexes are kept in canonical
// (itemset) order so totals are summed in a fixed order.
class WorkloadCostTable {
 public:
  WorkloadCostTable(const WorkloadBatch& batch, std::vector<AttributeSet> indexes, const StarSchema& schema,
                    const CostParameters& params)
      : indexes_(std::move(indexes)) {
    std::sort(indexes_.begin(), indexes_.end());
    indexes_.erase(std::unique(indexes_.begin(), indexes_.end()), indexes_.end());
    maintenance_.reserve(indexes_.size());
    for (const auto& x : indexes_) maintenance_.push_back(maintenance_cost(x, schema, params).pages);
    for (const auto& q : batch.queries) {
      QueryRow row;
      row.weight = static_cast<double>(q.weight);
      row.unindexed = query_cost_unindexed(q, schema).pages;
      for (std::size_t i = 0; i < indexes_.size(); ++i) {
        if (is_usable(q, indexes_[i])) row.indexed.emplace_back(i, query_cost_indexed(q, indexes_[i], schema, params).pages);
      }
      rows_.push_back(std::move(row));
    }
  }

  const std::vector<AttributeSet>& indexes() const { return indexes_; }
  std::size_t position(const AttributeSet& x) const {
    auto it = std::lower_bound(indexes_.begin(), indexes_.end(), x);
    if (it == indexes_.end() || *it != x) throw ValidationError("index not in cost table");
    return static_cast<std::size_t>(it - indexes_.begin());
  }

  // Access term only.
  double access(const std::vector<bool>& selected) const {
    double total = 0.0;
    for (const auto& row : rows_) {
      double best = row.unindexed;
      for (const auto& [i, c] : row.indexed)
        if (selected[i] && c < best) best = c;
      total += row.weight * best;
    }
    return total;
  }

  double maintenance(const std::vector<bool>& selected) const {
    double total = 0.0;
    for (std::size_t i = 0; i < indexes_.size(); ++i)
      if (selected[i]) total += maintenance_[i];
    return total;
  }

  double total(const std::vector<bool>& selected) const { return access(selected) + maintenance(selected); }

  // Maintenance of one index alone.
  double maintenance_of(std::size_t i) const { return maintenance_[i]; }

 private:
  struct QueryRow {
    double weight = 1.0;
    double unindexed = 0.0;
    std::vector<std::pair<std::size_t, double>> indexed;
  };

  std::vector<AttributeSet> indexes_;
  std::vector<double> maintenance_;
  std::vector<QueryRow> rows_;
};

inline CostEstimate workload_cost(const WorkloadBatch& batch, const std::vector<AttributeSet>& configuration,
                                  const StarSchema& schema, const CostParameters& params = {}) {
  WorkloadCostTable table(batch, configuration, schema, params);
  return {table.total(std::vector<bool>(table.indexes().size(), true))};
}

}  // namespace dynidx
