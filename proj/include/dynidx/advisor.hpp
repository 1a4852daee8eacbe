#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynidx/context.hpp"
#include "dynidx/costmodel.hpp"
#include "dynidx/error.hpp"
#include "dynidx/hash.hpp"
#include "dynidx/miner.hpp"
#include "dynidx/schema.hpp"
#include "dynidx/time.hpp"
#include "dynidx/workload.hpp"

namespace dynidx {

inline constexpr std::size_t kMaxIndexNameLength = 30;

// bji_<fact>_<table>_<attr>[_<table>_<attr>...]; names longer than 30
// characters keep a 21-character prefix followed by _<8 hex digit hash>.
inline std::string index_name(const AttributeSet& itemset, const StarSchema& schema) {
  std::string name = "bji_" + schema.fact.name;
  for (const auto& a : itemset) name += "_" + a.table + "_" + a.attribute;
  if (name.size() <= kMaxIndexNameLength) return name;
  const std::string suffix = "_" + hex8(fnv1a32(name));
  return name.substr(0, kMaxIndexNameLength - suffix.size()) + suffix;
}

struct CandidateIndex {
  AttributeSet itemset;
  std::uint64_t size = 0;  // 0 when infeasible
  std::string name;
  bool feasible = true;

  friend bool operator==(const CandidateIndex& a, const CandidateIndex& b) {
    return a.itemset == b.itemset && a.size == b.size && a.name == b.name && a.feasible == b.feasible;
  }
};

inline CandidateIndex make_candidate(const AttributeSet& itemset, const StarSchema& schema,
                                     const CostParameters& params) {
  CandidateIndex c;
  c.itemset = itemset;
  c.name = index_name(itemset, schema);
  try {
    c.size = index_size(itemset, schema, params);
  } catch (const InfeasibleIndex&) {
    c.feasible = false;
    c.size = 0;
  }
  return c;
}

// Canonical: sorted by itemset, itemsets distinct.
struct IndexConfiguration {
  std::vector<CandidateIndex> indexes;
  std::uint64_t total_size = 0;

  std::vector<AttributeSet> itemsets() const {
    std::vector<AttributeSet> out;
    for (const auto& i : indexes) out.push_back(i.itemset);
    return out;
  }

  bool contains(const AttributeSet& x) const {
    return std::any_of(indexes.begin(), indexes.end(), [&](const CandidateIndex& c) { return c.itemset == x; });
  }

  friend bool operator==(const IndexConfiguration& a, const IndexConfiguration& b) {
    return a.indexes == b.indexes && a.total_size == b.total_size;
  }
};

inline IndexConfiguration make_configuration(std::vector<CandidateIndex> indexes) {
  std::sort(indexes.begin(), indexes.end(),
            [](const CandidateIndex& a, const CandidateIndex& b) { return a.itemset < b.itemset; });
  indexes.erase(std::unique(indexes.begin(), indexes.end(),
                            [](const CandidateIndex& a, const CandidateIndex& b) { return a.itemset == b.itemset; }),
                indexes.end());
  IndexConfiguration out;
  for (const auto& i : indexes) out.total_size += i.size;
  out.indexes = std::move(indexes);
  return out;
}

struct ConfigurationDiff {
  std::vector<CandidateIndex> to_create;  // sorted by name
  std::vector<CandidateIndex> to_drop;    // sorted by name

  bool empty() const { return to_create.empty() && to_drop.empty(); }
};

inline AttributeSet attributes_of(const std::vector<ItemId>& items, const ItemDictionary& dictionary) {
  AttributeSet out;
  for (ItemId i : items) out.insert(dictionary.attribute(i));
  return out;
}

inline std::vector<ItemId> items_of(const AttributeSet& attrs, const ItemDictionary& dictionary) {
  std::vector<ItemId> out;
  for (const auto& a : attrs) {
    auto id = dictionary.find(a);
    if (!id) throw InvariantViolation("index attribute '" + a.to_string() + "' is unknown to the knowledge base");
    out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// I_C = (I ∪ I+) − I-. Infeasible candidates are kept (flagged) for reporting.
inline std::vector<CandidateIndex> generate_candidates(const MiningOutcome& outcome, const IndexConfiguration& current,
                                                       const ItemDictionary& dictionary, const StarSchema& schema,
                                                       const CostParameters& params) {
  std::set<AttributeSet> pool;
  for (const auto& i : current.indexes) pool.insert(i.itemset);
  for (const auto& e : outcome.emerged) pool.insert(attributes_of(e.items, dictionary));
  for (const auto& d : outcome.declined) pool.erase(attributes_of(d.items, dictionary));

  std::vector<CandidateIndex> out;
  for (const auto& x : pool) {
    const auto existing = std::find_if(current.indexes.begin(), current.indexes.end(),
                                       [&](const CandidateIndex& c) { return c.itemset == x; });
    out.push_back(existing != current.indexes.end() ? *existing : make_candidate(x, schema, params));
  }
  return out;
}

struct GreedyStep {
  AttributeSet itemset;
  double cost_before = 0.0;
  double cost_after = 0.0;
};

// Greedy selection: each round adds the fitting candidate with the largest
// reduction of total workload cost (access + maintenance), re-evaluated against
// the current selection; stops when no candidate both fits and improves.
// Ties: smaller size, then lexicographically smaller itemset.
inline IndexConfiguration select_configuration(const std::vector<CandidateIndex>& candidates,
                                               const WorkloadBatch& batch, const StarSchema& schema,
                                               const CostParameters& params, std::uint64_t budget,
                                               std::vector<GreedyStep>* trace = nullptr) {
  std::map<AttributeSet, CandidateIndex> feasible;
  for (const auto& c : candidates)
    if (c.feasible) feasible.emplace(c.itemset, c);

  std::vector<AttributeSet> itemsets;
  for (const auto& [x, c] : feasible) itemsets.push_back(x);
  const WorkloadCostTable table(batch, itemsets, schema, params);
  const auto& order = table.indexes();

  std::vector<bool> selected(order.size(), false);
  std::uint64_t used = 0;
  double current = table.total(selected);
  std::vector<CandidateIndex> chosen;

  for (;;) {
    std::optional<std::size_t> best;
    double best_gain = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (selected[i]) continue;
      const std::uint64_t size = feasible.at(order[i]).size;
      if (size > budget || used > budget - size) continue;
      selected[i] = true;
      const double gain = current - table.total(selected);
      selected[i] = false;
      if (!best || gain > best_gain ||
          (gain == best_gain && size < feasible.at(order[*best]).size)) {
        best = i;
        best_gain = gain;
      }
    }
    if (!best || !(best_gain > 0.0)) break;
    selected[*best] = true;
    const double after = table.total(selected);
    if (trace != nullptr) trace->push_back({order[*best], current, after});
    current = after;
    used += feasible.at(order[*best]).size;
    chosen.push_back(feasible.at(order[*best]));
  }
  return make_configuration(std::move(chosen));
}

inline ConfigurationDiff diff_configurations(const IndexConfiguration& current, const IndexConfiguration& next) {
  ConfigurationDiff diff;
  for (const auto& i : next.indexes)
    if (!current.contains(i.itemset)) diff.to_create.push_back(i);
  for (const auto& i : current.indexes)
    if (!next.contains(i.itemset)) diff.to_drop.push_back(i);
  auto by_name = [](const CandidateIndex& a, const CandidateIndex& b) {
    return a.name != b.name ? a.name < b.name : a.itemset < b.itemset;
  };
  std::sort(diff.to_create.begin(), diff.to_create.end(), by_name);
  std::sort(diff.to_drop.begin(), diff.to_drop.end(), by_name);
  return diff;
}

// (I − to_drop) ∪ to_create
inline IndexConfiguration apply_diff(const IndexConfiguration& current, const ConfigurationDiff& diff) {
  std::vector<CandidateIndex> out;
  for (const auto& i : current.indexes) {
    const bool dropped = std::any_of(diff.to_drop.begin(), diff.to_drop.end(),
                                     [&](const CandidateIndex& d) { return d.itemset == i.itemset; });
    if (!dropped) out.push_back(i);
  }
  out.insert(out.end(), diff.to_create.begin(), diff.to_create.end());
  return make_configuration(std::move(out));
}

// DROP lines first, then CREATE lines, each group in name order. Empty diff -> "".
inline std::string emit_ddl(const ConfigurationDiff& diff, const StarSchema& schema) {
  std::ostringstream out;
  for (const auto& d : diff.to_drop) out << "DROP INDEX " << d.name << ";\n";
  for (const auto& c : diff.to_create) {
    std::set<std::string> dims;
    for (const auto& a : c.itemset) dims.insert(a.table);
    out << "CREATE BITMAP INDEX " << c.name << " ON " << schema.fact.name << "(";
    bool first = true;
    for (const auto& a : c.itemset) {
      out << (first ? "" : ", ") << a.table << "." << a.attribute;
      first = false;
    }
    out << ") FROM " << schema.fact.name;
    for (const auto& d : dims) out << ", " << d;
    out << " WHERE ";
    first = true;
    for (const auto& d : dims) {
      const std::string* fk = schema.foreign_key_for(d);
      if (fk == nullptr) throw ValidationError("dimension '" + d + "' has no join key");
      out << (first ? "" : " AND ") << schema.fact.name << "." << *fk << " = " << d << "."
          << schema.dimension(d)->primary_key;
      first = false;
    }
    out << ";\n";
  }
  return out.str();
}

struct StepTimings {
  double context_ms = 0.0;
  double mining_ms = 0.0;
  double classification_ms = 0.0;
  double candidates_ms = 0.0;
  double selection_ms = 0.0;
  double update_ms = 0.0;

  // Steps (1)-(5): everything that decides the configuration.
  double selection_total_ms() const { return context_ms + mining_ms + classification_ms + candidates_ms + selection_ms; }
};

struct Recommendation {
  MiningOutcome outcome;
  std::vector<CandidateIndex> candidates;
  IndexConfiguration selected;
  ConfigurationDiff diff;
  CostEstimate baseline_cost;
  CostEstimate recommended_cost;
  std::vector<CandidateIndex> dropped_beneficial;  // declined indexes that still had positive benefit
  std::size_t queries = 0;
  std::string ddl;
  StepTimings timings;
};

struct CycleResult {
  Recommendation recommendation;
  KnowledgeBase knowledge_base;
  IndexConfiguration configuration;
  WorkloadBatch workload;  // queries of the updated database, used for costing
  std::vector<std::string> warnings;
};

// (workload ∪ added) − removed, by query id; retained queries keep their order.
inline WorkloadBatch merge_workload(const WorkloadBatch& workload, const DeltaBatch& delta) {
  WorkloadBatch out;
  out.source = workload.source;
  for (const auto& q : workload.queries)
    if (!delta.removed_ids.contains(q.id)) out.queries.push_back(q);
  out.queries.insert(out.queries.end(), delta.added.queries.begin(), delta.added.queries.end());
  return out;
}

// One advisory cycle: context delta, incremental mining, classification,
// candidate generation, greedy selection, configuration diff. `workload`
// holds the parsed queries behind the knowledge base's transactions.
inline CycleResult run_cycle(const KnowledgeBase& kb, const DeltaBatch& delta, const IndexConfiguration& current,
                             const WorkloadBatch& workload, const StarSchema& schema, const CostParameters& params,
                             std::uint64_t budget) {
  params.validate();
  {
    std::set<std::string> ids;
    for (const auto& q : workload.queries) ids.insert(q.id);
    for (const auto& row : kb.database.rows()) {
      if (!ids.contains(row->id)) {
        throw InvariantViolation("transaction '" + row->id + "' has no stored query");
      }
    }
  }
  ItemsetFamily current_items;
  for (const auto& i : current.indexes) current_items.push_back({items_of(i.itemset, kb.dictionary()), 0});
  canonicalize(current_items);

  CycleResult result;
  Recommendation& rec = result.recommendation;
  Stopwatch clock;

  // (1) context
  TransactionDatabase next = apply_delta(kb.database, delta, &result.warnings);
  result.workload = merge_workload(workload, delta);
  rec.queries = result.workload.queries.size();
  rec.timings.context_ms = clock.lap_ms();

  // (2) incremental mining seeded by the previous maximal family
  const std::uint64_t threshold = kb.parameters.threshold(next.total_weight());
  ItemsetFamily new_maximal = detail::mine_seeded(next, threshold, kb.maximal);
  rec.timings.mining_ms = clock.lap_ms();

  // (3) emerged / declined / retained
  rec.outcome = classify(kb.maximal, new_maximal, current_items);
  rec.timings.classification_ms = clock.lap_ms();

  // (4) I_C
  rec.candidates = generate_candidates(rec.outcome, current, next.dictionary(), schema, params);
  rec.timings.candidates_ms = clock.lap_ms();

  // (5) greedy selection under budget
  rec.selected = select_configuration(rec.candidates, result.workload, schema, params, budget);
  rec.baseline_cost = workload_cost(result.workload, {}, schema, params);
  rec.recommended_cost = workload_cost(result.workload, rec.selected.itemsets(), schema, params);
  for (const auto& i : current.indexes) {
    const auto items = items_of(i.itemset, kb.dictionary());
    if (!i.feasible || !contains(rec.outcome.declined, items)) continue;
    if (workload_cost(result.workload, {i.itemset}, schema, params) < rec.baseline_cost) {
      rec.dropped_beneficial.push_back(i);
    }
  }
  rec.timings.selection_ms = clock.lap_ms();

  // (6) configuration update
  rec.diff = diff_configurations(current, rec.selected);
  rec.ddl = emit_ddl(rec.diff, schema);
  rec.timings.update_ms = clock.lap_ms();

  if (rec.selected.total_size > budget) throw InternalError("selected configuration exceeds the budget");
  if (rec.recommended_cost.pages > rec.baseline_cost.pages) {
    throw InternalError("recommended configuration costs more than the unindexed baseline");
  }

  KnowledgeBase& out = result.knowledge_base;
  out.parameters = kb.parameters;
  out.database = std::move(next);
  out.maximal = std::move(new_maximal);
  out.version = kb.version + 1;
  out.created_at = kb.created_at;
  out.updated_at = utc_timestamp();
  result.configuration = rec.selected;
  return result;
}

// Report JSON. Timings are omitted when `with_timings` is false so reports of
// identical inputs compare byte-for-byte.
inline json report_json(const Recommendation& rec, const ItemDictionary& dictionary, bool with_timings = true) {
  auto itemsets = [&](const ItemsetFamily& family) {
    json arr = json::array();
    for (const auto& s : family) {
      json attrs = json::array();
      for (const auto& a : attributes_of(s.items, dictionary)) attrs.push_back(a.to_string());
      arr.push_back({{"attributes", attrs}, {"support", s.support}});
    }
    return arr;
  };
  auto indexes = [](const std::vector<CandidateIndex>& list) {
    json arr = json::array();
    for (const auto& c : list) {
      json attrs = json::array();
      for (const auto& a : c.itemset) attrs.push_back(a.to_string());
      arr.push_back({{"name", c.name}, {"attributes", attrs}, {"size_bytes", c.size}, {"feasible", c.feasible}});
    }
    return arr;
  };
  json out;
  out["queries"] = rec.queries;
  out["emerged"] = itemsets(rec.outcome.emerged);
  out["declined"] = itemsets(rec.outcome.declined);
  out["retained"] = itemsets(rec.outcome.retained);
  out["candidates"] = indexes(rec.candidates);
  out["selected"] = indexes(rec.selected.indexes);
  out["selected_total_bytes"] = rec.selected.total_size;
  out["to_create"] = indexes(rec.diff.to_create);
  out["to_drop"] = indexes(rec.diff.to_drop);
  out["dropped_beneficial"] = indexes(rec.dropped_beneficial);
  out["baseline_cost_pages"] = rec.baseline_cost.pages;
  out["recommended_cost_pages"] = rec.recommended_cost.pages;
  if (with_timings) {
    out["timings_ms"] = {{"context", rec.timings.context_ms},
                         {"mining", rec.timings.mining_ms},
                         {"classification", rec.timings.classification_ms},
                         {"candidates", rec.timings.candidates_ms},
                         {"selection", rec.timings.selection_ms},
                         {"update", rec.timings.update_ms}};
  }
  return out;
}

}  // namespace dynidx
