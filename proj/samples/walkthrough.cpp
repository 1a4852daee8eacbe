// Runs the five sample workloads through the advisor in memory, keeping one
// batch of history, and prints what changed at each cycle.
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "dynidx/dynidx.hpp"

namespace fs = std::filesystem;
using namespace dynidx;

static void print_family(const char* label, const ItemsetFamily& family, const ItemDictionary& dict) {
  for (const auto& s : family) {
    std::cout << "  " << label << " {";
    bool first = true;
    for (const auto& a : attributes_of(s.items, dict)) {
      std::cout << (first ? "" : ", ") << a.to_string();
      first = false;
    }
    std::cout << "} support " << s.support << "\n";
  }
}

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(DYNIDX_SAMPLES_DIR);
  try {
    const StarSchema schema = load_schema(dir / "schema.json");
    const CostParameters cost;
    const std::uint64_t budget = std::uint64_t{2} << 30;

    KnowledgeBase kb = empty_knowledge_base({});
    IndexConfiguration config;
    WorkloadBatch workload;
    std::set<std::string> previous;

    for (int c = 1; c <= 5; ++c) {
      DeltaBatch delta;
      delta.added = load_workload(dir / "workloads" / ("q" + std::to_string(c) + ".sql"), schema);
      delta.removed_ids = previous;
      previous.clear();
      for (const auto& q : delta.added.queries) previous.insert(q.id);

      CycleResult r = run_cycle(kb, delta, config, workload, schema, cost, budget);
      const Recommendation& rec = r.recommendation;
      std::cout << "cycle " << c << ": " << rec.queries << " queries, " << rec.outcome.new_maximal.size()
                << " maximal itemsets, " << rec.selected.indexes.size() << " indexes ("
                << detail::human_bytes(rec.selected.total_size) << ")\n";
      print_family("+", rec.outcome.emerged, r.knowledge_base.dictionary());
      print_family("-", rec.outcome.declined, r.knowledge_base.dictionary());
      std::cout << std::fixed << std::setprecision(1) << "  cost " << rec.baseline_cost.pages << " -> "
                << rec.recommended_cost.pages << " pages\n";
      std::cout << rec.ddl;

      kb = std::move(r.knowledge_base);
      config = std::move(r.configuration);
      workload = std::move(r.workload);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
