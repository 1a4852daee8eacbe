#include "catch_amalgamated.hpp"

#include "support/fixtures.hpp"

using namespace dynidx;
using Catch::Matchers::WithinRel;

namespace {

const StarSchema& schema() {
  static const StarSchema s = fixtures::sales_customer_schema();
  return s;
}

const AttributeRef kName{"customer", "name"};
const AttributeRef kCity{"customer", "city"};
const AttributeRef kSegment{"customer", "segment"};
const AttributeRef kBrand{"product", "brand"};
const AttributeRef kCategory{"product", "category"};

CandidateIndex candidate(const AttributeSet& x) { return make_candidate(x, schema(), {}); }

IndexConfiguration config_of(std::initializer_list<AttributeSet> sets) {
  std::vector<CandidateIndex> v;
  for (const auto& x : sets) v.push_back(candidate(x));
  return make_configuration(v);
}

std::set<AttributeSet> itemsets(const std::vector<CandidateIndex>& v) {
  std::set<AttributeSet> out;
  for (const auto& c : v) out.insert(c.itemset);
  return out;
}

// Dictionary over the five attributes above, in declaration order.
ItemDictionary dictionary() {
  ItemDictionary d;
  for (const auto& a : {kName, kCity, kSegment, kBrand, kCategory}) d.intern(a);
  return d;
}

Itemset itemset(const AttributeSet& x, const ItemDictionary& d) { return {items_of(x, d), 1}; }

// q1 restricts name and groups by city; q2 restricts city only.
WorkloadBatch two_query_batch() {
  WorkloadBatch b;
  b.queries.push_back(parse_query("SELECT c.city, SUM(s.amount) FROM sales s, customer c WHERE s.cust_id = c.id "
                                  "AND c.name = 'Dupont' GROUP BY c.city",
                                  schema()));
  b.queries.push_back(
      parse_query("SELECT COUNT(*) FROM sales s, customer c WHERE s.cust_id = c.id AND c.city = 'Lyon'", schema()));
  return b;
}

}  // namespace

TEST_CASE("index names") {
  CHECK(index_name({kCity}, schema()) == "bji_sales_customer_city");
  CHECK(index_name({kCity, kBrand}, schema()) == "bji_sales_customer_ci_c7fb1540");
  CHECK(index_name({kBrand, kCity}, schema()) == index_name({kCity, kBrand}, schema()));
  CHECK(index_name({kCity, kBrand}, schema()).size() == 30);
  CHECK(index_name({kCity, kBrand}, schema()) != index_name({kCity, kCategory}, schema()));
}

TEST_CASE("candidates: set algebra examples") {
  const auto dict = dictionary();
  const AttributeSet i1{kCity}, i2{kBrand}, i3{kSegment, kCategory};
  SECTION("current {i1,i2}, emerged {i3}, declined {i2}") {
    MiningOutcome o;
    o.emerged = {itemset(i3, dict)};
    o.declined = {itemset(i2, dict)};
    const auto c = generate_candidates(o, config_of({i1, i2}), dict, schema(), {});
    CHECK(itemsets(c) == std::set<AttributeSet>{i1, i3});
  }
  SECTION("nothing in, nothing out") {
    CHECK(generate_candidates({}, {}, dict, schema(), {}).empty());
  }
  SECTION("set semantics") {
    MiningOutcome o;
    o.emerged = {itemset(i1, dict)};
    const auto c = generate_candidates(o, config_of({i1}), dict, schema(), {});
    REQUIRE(c.size() == 1);
    CHECK(c[0].itemset == i1);
  }
  SECTION("infeasible candidates are flagged, reported, and never selected") {
    CostParameters tight;
    tight.bitmap_limit = 100;
    MiningOutcome o;
    o.emerged = {itemset({kName}, dict), itemset({kCity}, dict)};
    const auto c = generate_candidates(o, {}, dict, schema(), tight);
    REQUIRE(c.size() == 2);
    const auto& name = c[0].itemset == AttributeSet{kName} ? c[0] : c[1];
    CHECK_FALSE(name.feasible);
    const auto sel = select_configuration(c, two_query_batch(), schema(), tight, std::uint64_t{1} << 40);
    CHECK_FALSE(sel.contains({kName}));
  }
}

TEST_CASE("candidates equal (I ∪ I+) − I- on random sets") {
  fixtures::Rng rng(31);
  const auto dict = dictionary();
  std::vector<AttributeSet> universe;
  const std::vector<AttributeRef> attrs = {kName, kCity, kSegment, kBrand, kCategory};
  for (std::uint32_t m = 1; m < 32; ++m) {
    AttributeSet x;
    for (std::size_t i = 0; i < 5; ++i)
      if (m & (1u << i)) x.insert(attrs[i]);
    universe.push_back(x);
  }
  for (int trial = 0; trial < 500; ++trial) {
    std::set<AttributeSet> current, emerged, declined;
    for (const auto& x : universe) {
      if (rng.chance(0.2)) current.insert(x);
      if (rng.chance(0.2)) emerged.insert(x);
      if (rng.chance(0.2)) declined.insert(x);
    }
    std::vector<CandidateIndex> cur;
    for (const auto& x : current) cur.push_back(candidate(x));
    MiningOutcome o;
    for (const auto& x : emerged) o.emerged.push_back(itemset(x, dict));
    for (const auto& x : declined) o.declined.push_back(itemset(x, dict));
    std::set<AttributeSet> expected = current;
    expected.insert(emerged.begin(), emerged.end());
    for (const auto& x : declined) expected.erase(x);
    const auto got = generate_candidates(o, make_configuration(cur), dict, schema(), {});
    REQUIRE(itemsets(got) == expected);
    REQUIRE(got.size() == expected.size());
  }
}

TEST_CASE("greedy selection examples") {
  const auto batch = two_query_batch();
  const std::vector<CandidateIndex> cands = {candidate({kName}), candidate({kCity})};
  REQUIRE(cands[0].size == 12500000);
  REQUIRE(cands[1].size == 625000);

  SECTION("only the smaller one fits") {
    const auto sel = select_configuration(cands, batch, schema(), {}, 1000000);
    CHECK(itemsets(sel.indexes) == std::set<AttributeSet>{{kCity}});
  }
  SECTION("each fits alone but not together: the larger improvement wins") {
    std::vector<GreedyStep> trace;
    const auto sel = select_configuration(cands, batch, schema(), {}, 13000000, &trace);
    CHECK(itemsets(sel.indexes) == std::set<AttributeSet>{{kName}});
    REQUIRE(trace.size() == 1);
    CHECK(trace[0].cost_before == 2492.0);
    CHECK_THAT(trace[0].cost_after, WithinRel(123.05228751142545 + 1246.0 + 152.587890625, 1e-12));
  }
  SECTION("both fit") {
    std::vector<GreedyStep> trace;
    const auto sel = select_configuration(cands, batch, schema(), {}, 20000000, &trace);
    CHECK(itemsets(sel.indexes) == std::set<AttributeSet>{{kName}, {kCity}});
    CHECK(sel.total_size == 13125000);
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].itemset == AttributeSet{kName});
    CHECK_THAT(trace[1].cost_after,
               WithinRel(123.05228751142545 + 985.8358049661446 + 152.587890625 + 7.62939453125, 1e-12));
  }
  SECTION("budget zero") {
    CHECK(select_configuration(cands, batch, schema(), {}, 0).indexes.empty());
  }
  SECTION("maintenance above benefit is never selected") {
    CostParameters heavy;
    heavy.maintenance_coefficient = Ratio(100, 1);
    CHECK(select_configuration(cands, batch, schema(), heavy, std::uint64_t{1} << 40).indexes.empty());
  }
  SECTION("an index no query uses is never selected") {
    const auto sel = select_configuration({candidate({kBrand})}, batch, schema(), {}, std::uint64_t{1} << 40);
    CHECK(sel.indexes.empty());
  }
}

TEST_CASE("greedy ties prefer the smaller index, then the smaller itemset") {
  const StarSchema twin = parse_schema(R"({
    "fact": {"name": "f", "row_count": 1000000, "row_width": 500,
             "attributes": [{"name": "k0", "distinct_values": 1000}, {"name": "k1", "distinct_values": 1000}],
             "join_keys": [{"fact_attribute": "k0", "dimension": "d0"}, {"fact_attribute": "k1", "dimension": "d1"}]},
    "dimensions": [
      {"name": "d0", "row_count": 1000, "row_width": 10, "primary_key": "id",
       "attributes": [{"name": "id", "distinct_values": 1000}, {"name": "x", "distinct_values": 100},
                      {"name": "y", "distinct_values": 40}]},
      {"name": "d1", "row_count": 1000, "row_width": 10, "primary_key": "id",
       "attributes": [{"name": "id", "distinct_values": 1000}, {"name": "x", "distinct_values": 100},
                      {"name": "z", "distinct_values": 50}]}]
  })");
  CostParameters free;
  free.maintenance_coefficient = Ratio(0, 1);
  auto cand = [&](const AttributeSet& x) { return make_candidate(x, twin, free); };
  const AttributeRef d0x{"d0", "x"}, d0y{"d0", "y"}, d1x{"d1", "x"}, d1z{"d1", "z"};

  SECTION("equal gains and sizes: lexicographically smaller itemset") {
    WorkloadBatch batch;
    batch.queries.push_back(parse_query("SELECT COUNT(*) FROM f, d0 WHERE f.k0 = d0.id AND d0.x = 1", twin));
    batch.queries.push_back(parse_query("SELECT COUNT(*) FROM f, d1 WHERE f.k1 = d1.id AND d1.x = 1", twin));
    const auto a = cand({d1x}), b = cand({d0x});
    REQUIRE(a.size == b.size);
    std::vector<GreedyStep> trace;
    const auto sel = select_configuration({a, b}, batch, twin, free, a.size, &trace);
    REQUIRE(trace.size() == 1);
    CHECK(sel.contains({d0x}));
  }
  SECTION("equal gains: smaller size first") {
    // Grouping on d0 keeps d0 in the plan either way; only the d1.z restriction filters.
    WorkloadBatch batch;
    batch.queries.push_back(parse_query(
        "SELECT d0.x, d0.y, COUNT(*) FROM f, d0, d1 WHERE f.k0 = d0.id AND f.k1 = d1.id AND d1.z = 2 "
        "GROUP BY d0.x, d0.y",
        twin));
    const auto big = cand({d0x, d1z}), small = cand({d0y, d1z});
    REQUIRE(small.size < big.size);
    REQUIRE(query_cost_indexed(batch.queries[0], big.itemset, twin, free) ==
            query_cost_indexed(batch.queries[0], small.itemset, twin, free));
    std::vector<GreedyStep> trace;
    const auto sel = select_configuration({big, small}, batch, twin, free, std::uint64_t{1} << 40, &trace);
    REQUIRE(trace.size() == 1);
    CHECK(trace[0].itemset == small.itemset);
    CHECK(sel.contains(small.itemset));
  }
}

TEST_CASE("greedy selection respects the budget and strictly improves on random instances") {
  fixtures::Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const StarSchema s = fixtures::random_schema(rng, rng.uniform(2, 5));
    WorkloadBatch batch;
    for (int i = 0; i < 12; ++i) batch.queries.push_back(fixtures::random_query(rng, s, "q" + std::to_string(i)));
    CostParameters p;
    p.maintenance_coefficient = Ratio(rng.uniform(0, 20), 100);
    std::vector<CandidateIndex> cands;
    const auto n = rng.uniform(0, 10);
    for (std::uint64_t i = 0; i < n; ++i) cands.push_back(make_candidate(fixtures::random_itemset(rng, s), s, p));
    std::uint64_t total = 0;
    for (const auto& c : cands) total += c.size;
    const std::uint64_t budget = rng.uniform(0, total + 1);
    std::vector<GreedyStep> trace;
    const auto sel = select_configuration(cands, batch, s, p, budget, &trace);
    REQUIRE(sel.total_size <= budget);
    for (const auto& t : trace) REQUIRE(t.cost_after < t.cost_before);
    for (std::size_t i = 1; i < trace.size(); ++i) REQUIRE(trace[i].cost_before == trace[i - 1].cost_after);
    REQUIRE(workload_cost(batch, sel.itemsets(), s, p).pages <= workload_cost(batch, {}, s, p).pages);
    // Determinism.
    REQUIRE(select_configuration(cands, batch, s, p, budget) == sel);
  }
}

TEST_CASE("diff examples") {
  const AttributeSet x{kCity}, y{kBrand}, z{kSegment};
  const auto d = diff_configurations(config_of({x, y}), config_of({y, z}));
  CHECK(itemsets(d.to_create) == std::set<AttributeSet>{z});
  CHECK(itemsets(d.to_drop) == std::set<AttributeSet>{x});
  CHECK(diff_configurations(config_of({x, y}), config_of({x, y})).empty());
  const auto cold = diff_configurations({}, config_of({x, y}));
  CHECK(itemsets(cold.to_create) == std::set<AttributeSet>{x, y});
  CHECK(cold.to_drop.empty());
}

TEST_CASE("diff soundness on random configurations") {
  fixtures::Rng rng(41);
  const std::vector<AttributeSet> pool = {{kName}, {kCity}, {kSegment}, {kBrand}, {kCategory},
                                          {kCity, kBrand}, {kSegment, kCategory}, {kName, kCategory}};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<CandidateIndex> a, b;
    for (const auto& x : pool) {
      if (rng.chance(0.4)) a.push_back(candidate(x));
      if (rng.chance(0.4)) b.push_back(candidate(x));
    }
    const auto cur = make_configuration(a), next = make_configuration(b);
    const auto d = diff_configurations(cur, next);
    REQUIRE(apply_diff(cur, d) == next);
    for (const auto& x : d.to_drop) REQUIRE(cur.contains(x.itemset));
    for (const auto& x : d.to_create) REQUIRE_FALSE(cur.contains(x.itemset));
    for (const auto& x : d.to_create)
      for (const auto& y : d.to_drop) REQUIRE(x.itemset != y.itemset);
  }
}

TEST_CASE("emit_ddl examples") {
  CHECK(emit_ddl({}, schema()).empty());
  ConfigurationDiff create;
  create.to_create = {candidate({kCity})};
  CHECK(emit_ddl(create, schema()) ==
        "CREATE BITMAP INDEX bji_sales_customer_city ON sales(customer.city) FROM sales, customer "
        "WHERE sales.cust_id = customer.id;\n");
  ConfigurationDiff drop;
  drop.to_drop = {candidate({kCity})};
  CHECK(emit_ddl(drop, schema()) == "DROP INDEX bji_sales_customer_city;\n");

  const auto both = diff_configurations(config_of({{kSegment}}), config_of({{kCity, kBrand}, {kCategory}}));
  CHECK(emit_ddl(both, schema()) ==
        "DROP INDEX bji_sales_customer_segment;\n"
        "CREATE BITMAP INDEX bji_sales_customer_ci_c7fb1540 ON sales(customer.city, product.brand) FROM sales, "
        "customer, product WHERE sales.cust_id = customer.id AND sales.prod_id = product.id;\n"
        "CREATE BITMAP INDEX bji_sales_product_category ON sales(product.category) FROM sales, product "
        "WHERE sales.prod_id = product.id;\n");
  CHECK(emit_ddl(both, schema()) == emit_ddl(both, schema()));
}

namespace {

// Ten queries; three of them restrict {customer.city, product.brand} together.
WorkloadBatch planted_batch() {
  std::vector<std::string> texts;
  for (int i = 0; i < 3; ++i) {
    texts.push_back("SELECT SUM(s.amount) FROM sales s, customer c, product p WHERE s.cust_id = c.id AND "
                    "s.prod_id = p.id AND c.city = 'c" + std::to_string(i) + "' AND p.brand = 'b" + std::to_string(i) + "'");
  }
  for (int i = 0; i < 7; ++i) {
    texts.push_back("SELECT c.segment, COUNT(*) FROM sales s, customer c WHERE s.cust_id = c.id AND c.name = 'n" +
                    std::to_string(i) + "' GROUP BY c.segment");
  }
  WorkloadBatch b;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto q = parse_query(texts[i], schema());
    q.id = "w" + std::to_string(i);
    b.queries.push_back(q);
  }
  return b;
}

}  // namespace

TEST_CASE("run_cycle: cold start, idempotence, and a declined group is dropped") {
  const CostParameters cost;
  const std::uint64_t budget = std::uint64_t{1} << 40;
  const KnowledgeBase empty = empty_knowledge_base({Ratio(1, 5)});

  DeltaBatch first;
  first.added = planted_batch();
  const auto c1 = run_cycle(empty, first, {}, {}, schema(), cost, budget);
  const auto& r1 = c1.recommendation;
  CHECK(r1.queries == 10);
  CHECK(r1.diff.to_drop.empty());
  CHECK(itemsets(r1.diff.to_create) == itemsets(r1.selected.indexes));
  CHECK(r1.selected.contains({kCity, kBrand}));
  CHECK(r1.selected.contains({kName, kSegment}));
  CHECK(r1.recommended_cost.pages < r1.baseline_cost.pages);
  CHECK(identical(r1.outcome.new_maximal, brute_force_maximal(c1.knowledge_base.database, {Ratio(1, 5)})));
  CHECK(c1.knowledge_base.version == 1);
  CHECK(c1.configuration == r1.selected);

  SECTION("empty delta") {
    const auto c2 = run_cycle(c1.knowledge_base, {}, c1.configuration, c1.workload, schema(), cost, budget);
    const auto& r2 = c2.recommendation;
    CHECK(r2.outcome.emerged.empty());
    CHECK(r2.outcome.declined.empty());
    CHECK(r2.diff.empty());
    CHECK(r2.ddl.empty());
    CHECK(r2.selected == r1.selected);
    CHECK(r2.recommended_cost == r1.recommended_cost);
    CHECK(identical(c2.knowledge_base.maximal, c1.knowledge_base.maximal));
    CHECK(same_contents(c2.knowledge_base.database, c1.knowledge_base.database));
    CHECK(c2.knowledge_base.version == 2);
    // Same report apart from the classification of an unchanged family.
    auto j1 = report_json(r1, c1.knowledge_base.dictionary(), false);
    auto j2 = report_json(r2, c2.knowledge_base.dictionary(), false);
    for (auto key : {"emerged", "declined", "retained", "to_create", "to_drop"}) {
      j1.erase(key);
      j2.erase(key);
    }
    CHECK(j1 == j2);
  }
  SECTION("removing the planted queries declines the group and drops its index") {
    DeltaBatch remove;
    remove.removed_ids = {"w0", "w1", "w2"};
    const auto c2 = run_cycle(c1.knowledge_base, remove, c1.configuration, c1.workload, schema(), cost, budget);
    const auto& r2 = c2.recommendation;
    const auto& dict = c2.knowledge_base.dictionary();
    CHECK(contains(r2.outcome.declined, items_of({kCity, kBrand}, dict)));
    CHECK(itemsets(r2.diff.to_drop) == std::set<AttributeSet>{{kCity, kBrand}});
    CHECK(identical(r2.outcome.new_maximal, brute_force_maximal(c2.knowledge_base.database, {Ratio(1, 5)})));
    CHECK(r2.queries == 7);
    CHECK(r2.ddl == "DROP INDEX " + index_name({kCity, kBrand}, schema()) + ";\n");
  }
  SECTION("budget shrink drops indexes that no longer fit") {
    const auto c2 = run_cycle(c1.knowledge_base, {}, c1.configuration, c1.workload, schema(), cost, 0);
    CHECK(c2.recommendation.selected.indexes.empty());
    CHECK(itemsets(c2.recommendation.diff.to_drop) == itemsets(r1.selected.indexes));
  }
}

TEST_CASE("run_cycle is deterministic") {
  DeltaBatch first;
  first.added = planted_batch();
  const KnowledgeBase empty = empty_knowledge_base({Ratio(1, 5)});
  const auto a = run_cycle(empty, first, {}, {}, schema(), {}, 1u << 30);
  const auto b = run_cycle(empty, first, {}, {}, schema(), {}, 1u << 30);
  CHECK(report_json(a.recommendation, a.knowledge_base.dictionary(), false).dump() ==
        report_json(b.recommendation, b.knowledge_base.dictionary(), false).dump());
  CHECK(a.recommendation.ddl == b.recommendation.ddl);
}

TEST_CASE("run_cycle rejects a knowledge base whose queries are missing") {
  DeltaBatch first;
  first.added = planted_batch();
  const auto c1 = run_cycle(empty_knowledge_base({}), first, {}, {}, schema(), {}, 1u << 30);
  CHECK_THROWS_AS(run_cycle(c1.knowledge_base, {}, c1.configuration, {}, schema(), {}, 1u << 30), InvariantViolation);
}

TEST_CASE("report JSON carries the documented keys") {
  DeltaBatch first;
  first.added = planted_batch();
  const auto c1 = run_cycle(empty_knowledge_base({Ratio(1, 5)}), first, {}, {}, schema(), {}, 1u << 30);
  const auto j = report_json(c1.recommendation, c1.knowledge_base.dictionary());
  for (auto key : {"emerged", "declined", "retained", "candidates", "selected", "to_create", "to_drop",
                   "baseline_cost_pages", "recommended_cost_pages", "timings_ms"}) {
    CHECK(j.contains(key));
  }
  for (auto step : {"context", "mining", "classification", "candidates", "selection", "update"}) {
    CHECK(j["timings_ms"].contains(step));
  }
  CHECK_FALSE(report_json(c1.recommendation, c1.knowledge_base.dictionary(), false).contains("timings_ms"));
}
