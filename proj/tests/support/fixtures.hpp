#pragma once

// Generators and fixtures shared by the unit and acceptance tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynidx/dynidx.hpp"

namespace fixtures {

using namespace dynidx;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(engine_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[uniform(0, v.size() - 1)];
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline AttributeRef item_attr(std::size_t i) { return {"d", "a" + std::to_string(i)}; }

inline ItemDictionary dictionary_of(std::size_t n) {
  ItemDictionary d;
  for (std::size_t i = 0; i < n; ++i) d.intern(item_attr(i));
  return d;
}

// Rows given as item-id lists; ids t1, t2, ...
inline TransactionDatabase make_db(std::size_t items, const std::vector<std::vector<ItemId>>& rows,
                                   const std::vector<std::uint64_t>& weights = {}) {
  std::vector<Transaction> txs;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    txs.push_back(make_transaction("t" + std::to_string(r + 1), rows[r], weights.empty() ? 1 : weights[r]));
  }
  return TransactionDatabase(dictionary_of(items), std::move(txs));
}

// a=0, b=1, c=2, d=3: {a,b,c}, {a,b}, {a,c}, {b,c,d}
inline TransactionDatabase abcd_db() { return make_db(4, {{0, 1, 2}, {0, 1}, {0, 2}, {1, 2, 3}}); }

inline std::vector<ItemId> random_row(Rng& rng, std::size_t items, double density) {
  std::vector<ItemId> row;
  for (std::size_t i = 0; i < items; ++i)
    if (rng.chance(density)) row.push_back(static_cast<ItemId>(i));
  return row;
}

// A query whose indexable attributes are exactly `items` (as d.a<i>).
inline AnalyticalQuery item_query(const std::string& id, const std::vector<ItemId>& items, std::uint64_t weight = 1) {
  AnalyticalQuery q;
  q.id = id;
  q.weight = weight;
  for (ItemId i : items) q.grouping.insert(item_attr(i));
  if (!items.empty()) q.joined_dimensions.insert("d");
  return q;
}

struct RandomContext {
  std::size_t items = 0;
  std::vector<std::vector<ItemId>> rows;
  std::vector<std::uint64_t> weights;
  Ratio minsup{1, 10};

  TransactionDatabase database() const { return make_db(items, rows, weights); }
};

inline RandomContext random_context(Rng& rng, std::size_t max_items = 12, std::size_t max_rows = 30) {
  static const std::vector<Ratio> kMinsups = {Ratio(1, 10), Ratio(3, 10), Ratio(1, 2)};
  RandomContext c;
  c.items = rng.uniform(1, max_items);
  const std::size_t rows = rng.uniform(0, max_rows);
  const double density = rng.real(0.1, 0.9);
  const bool weighted = rng.chance(0.25);
  for (std::size_t r = 0; r < rows; ++r) {
    c.rows.push_back(random_row(rng, c.items, density));
    c.weights.push_back(weighted ? rng.uniform(1, 4) : 1);
  }
  c.minsup = rng.pick(kMinsups);
  return c;
}

// Delta generator over a running id counter: some removals of existing ids,
// some additions drawn over a possibly larger item universe.
struct DeltaStream {
  Rng& rng;
  std::size_t items;
  double density;
  std::size_t next_id = 0;

  DeltaBatch next(const TransactionDatabase& current) {
    DeltaBatch d;
    for (const auto& row : current.rows())
      if (rng.chance(0.3)) d.removed_ids.insert(row->id);
    const std::size_t adds = rng.uniform(0, 10);
    for (std::size_t k = 0; k < adds; ++k) {
      d.added.queries.push_back(
          item_query("n" + std::to_string(next_id++), random_row(rng, items, density), rng.chance(0.2) ? 2 : 1));
    }
    return d;
  }
};

// Schema over single-letter style fixtures: sales(100000 rows, 100 B) and
// customer(1000 rows, 200 B: id 1000, name 1000, city 50, segment 4).
inline StarSchema sales_customer_schema() {
  return parse_schema(R"({
    "page_size": 8192,
    "fact": {"name": "sales", "row_count": 100000, "row_width": 100,
             "attributes": [{"name": "cust_id", "distinct_values": 1000},
                            {"name": "prod_id", "distinct_values": 200},
                            {"name": "amount", "distinct_values": 5000}],
             "join_keys": [{"fact_attribute": "cust_id", "dimension": "customer"},
                           {"fact_attribute": "prod_id", "dimension": "product"}]},
    "dimensions": [
      {"name": "customer", "row_count": 1000, "row_width": 200, "primary_key": "id",
       "attributes": [{"name": "id", "distinct_values": 1000}, {"name": "name", "distinct_values": 1000},
                      {"name": "city", "distinct_values": 50}, {"name": "segment", "distinct_values": 4}]},
      {"name": "product", "row_count": 200, "row_width": 120, "primary_key": "id",
       "attributes": [{"name": "id", "distinct_values": 200}, {"name": "brand", "distinct_values": 10},
                      {"name": "category", "distinct_values": 4}]}
    ]
  })");
}

// Random star schema with `dims` dimensions and a handful of attributes each.
inline StarSchema random_schema(Rng& rng, std::size_t dims = 4) {
  StarSchema s;
  s.fact.name = "f";
  s.fact.row_count = rng.uniform(1000, 5000000);
  s.fact.row_width = rng.uniform(20, 200);
  for (std::size_t d = 0; d < dims; ++d) {
    TableStats t;
    t.name = "d" + std::to_string(d);
    t.row_count = rng.uniform(10, 100000);
    t.row_width = rng.uniform(20, 300);
    t.primary_key = "id";
    t.attributes.push_back({"id", t.row_count});
    const std::size_t attrs = rng.uniform(2, 5);
    for (std::size_t a = 0; a < attrs; ++a) t.attributes.push_back({"x" + std::to_string(a), rng.uniform(2, 200)});
    s.fact.attributes.push_back({"k" + std::to_string(d), t.row_count});
    s.join_keys["k" + std::to_string(d)] = {t.name, "id"};
    s.dimensions.push_back(std::move(t));
  }
  validate(s);
  return s;
}

inline std::vector<AttributeRef> non_key_attributes(const StarSchema& s) {
  std::vector<AttributeRef> out;
  for (const auto& d : s.dimensions)
    for (const auto& a : d.attributes)
      if (a.name != d.primary_key) out.push_back({d.name, a.name});
  return out;
}

inline AnalyticalQuery random_query(Rng& rng, const StarSchema& s, const std::string& id) {
  const auto attrs = non_key_attributes(s);
  AnalyticalQuery q;
  q.id = id;
  q.weight = rng.uniform(1, 3);
  q.measures.push_back({Aggregate::count, std::nullopt});
  const std::size_t g = rng.uniform(0, 2);
  for (std::size_t i = 0; i < g; ++i) q.grouping.insert(rng.pick(attrs));
  const std::size_t r = rng.uniform(0, 3);
  for (std::size_t i = 0; i < r; ++i) {
    RestrictionPredicate p;
    p.attribute = rng.pick(attrs);
    const auto k = rng.uniform(0, 9);
    p.kind = k < 6 ? PredicateKind::equality : k < 8 ? PredicateKind::in_list : PredicateKind::between;
    p.value_count = p.kind == PredicateKind::in_list ? rng.uniform(2, 5) : 1;
    q.restrictions.push_back(p);
  }
  for (const auto& a : extract_indexable(q)) q.joined_dimensions.insert(a.table);
  if (rng.chance(0.3)) q.joined_dimensions.insert(rng.pick(s.dimensions).name);
  return q;
}

inline AttributeSet random_itemset(Rng& rng, const StarSchema& s, std::size_t max_size = 3) {
  const auto attrs = non_key_attributes(s);
  AttributeSet x;
  const std::size_t n = rng.uniform(1, max_size);
  while (x.size() < n) x.insert(rng.pick(attrs));
  return x;
}

// A knowledge base after 0-3 random incremental steps.
inline KnowledgeBase random_kb(Rng& rng) {
  DeltaStream stream{rng, rng.uniform(1, 12), rng.real(0.1, 0.8)};
  KnowledgeBase kb = empty_knowledge_base({Ratio(rng.uniform(1, 10), 10)});
  const auto steps = rng.uniform(0, 3);
  for (std::uint64_t i = 0; i < steps; ++i) kb = mine_incremental(kb, stream.next(kb.database)).knowledge_base;
  return kb;
}

// Configured indexes are feasible, as they would be after a real cycle.
inline AdvisorState random_state(Rng& rng, const StarSchema& s) {
  AdvisorState st;
  std::vector<CandidateIndex> idx;
  for (std::uint64_t i = 0; i < rng.uniform(0, 4); ++i) {
    auto c = make_candidate(random_itemset(rng, s), s, {});
    if (c.feasible) idx.push_back(c);
  }
  st.configuration = make_configuration(idx);
  for (std::uint64_t i = 0; i < rng.uniform(0, 5); ++i) {
    st.workload.push_back({"c1#" + std::to_string(i), "SELECT SUM(x) FROM f WHERE note = 'it''s'", rng.uniform(1, 4), rng.uniform(1, 9)});
  }
  for (std::uint64_t i = 0; i < rng.uniform(0, 5); ++i) {
    CycleRecord r;
    r.cycle = i + 1;
    r.queries = rng.uniform(0, 100);
    r.baseline_cost_pages = rng.real(0, 1e7);
    r.recommended_cost_pages = r.baseline_cost_pages * rng.real(0, 1);
    r.selection_ms = rng.real(0, 100);
    r.update_ms = rng.real(0, 1);
    st.history.push_back(r);
  }
  if (rng.chance(0.5)) st.budget = rng.uniform(0, std::uint64_t{1} << 50);
  return st;
}

inline std::string read(const std::filesystem::path& p) { return detail::read_file(p); }

}  // namespace fixtures
