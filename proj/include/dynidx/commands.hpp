#pragma once

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynidx/advisor.hpp"
#include "dynidx/costmodel.hpp"
#include "dynidx/error.hpp"
#include "dynidx/hash.hpp"
#include "dynidx/miner.hpp"
#include "dynidx/persistence.hpp"
#include "dynidx/ratio.hpp"
#include "dynidx/schema.hpp"
#include "dynidx/workload.hpp"

namespace dynidx {

enum ExitCode : int { kExitOk = 0, kExitUserError = 1, kExitInternal = 2 };

struct AdvisorConfig {
  std::optional<Ratio> minsup;  // falls back to the knowledge base's, then 0.05
  std::optional<std::uint64_t> budget;
  CostParameters cost;
  std::optional<std::uint64_t> retention_batches;
  std::filesystem::path schema = "schema.json";
  std::filesystem::path kb = "kb.json";
  std::filesystem::path state = "state.json";
  std::filesystem::path out = ".";
  bool force = false;
  std::string report_format = "json";
};

// "512", "64KB", "1.5 MB", "2GB"; suffixes are powers of 1024.
inline std::uint64_t parse_byte_size(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::uint64_t scale = 1;
  auto strip = [&](std::string_view suffix, std::uint64_t factor) {
    if (s.size() > suffix.size() && s.ends_with(suffix)) {
      s.resize(s.size() - suffix.size());
      scale = factor;
      return true;
    }
    return false;
  };
  strip("GB", std::uint64_t{1} << 30) || strip("MB", std::uint64_t{1} << 20) || strip("KB", std::uint64_t{1} << 10) ||
      strip("B", 1);
  try {
    const Ratio value = Ratio::parse(s);
    const unsigned __int128 bytes = static_cast<unsigned __int128>(value.num()) * scale / value.den();
    if (bytes > UINT64_MAX) throw ValidationError("byte size '" + std::string(text) + "' is too large");
    return static_cast<std::uint64_t>(bytes);
  } catch (const ParseError&) {
    throw ValidationError("invalid byte size '" + std::string(text) + "'");
  }
}

inline void validate(const AdvisorConfig& config) {
  if (config.minsup) MiningParameters{*config.minsup}.validate();
  config.cost.validate();
  if (config.retention_batches && *config.retention_batches == 0) {
    throw ValidationError("retention_batches must be >= 1");
  }
  if (config.report_format != "json" && config.report_format != "csv") {
    throw ValidationError("report format must be 'json' or 'csv'");
  }
}

// Config file: JSON object with the long flag names as keys (underscores).
// Relative paths in it are taken relative to `base` (the file's directory).
inline void apply_config_file(AdvisorConfig& config, const json& doc, const std::filesystem::path& base = {}) {
  using namespace detail;
  as_object(doc, "config");
  reject_unknown_keys(doc,
                      {"schema", "kb", "state", "out", "minsup", "budget", "maintenance_coefficient",
                       "between_fraction", "bitmap_limit", "retention_batches", "report_format"},
                      "config");
  auto ratio = [](const json& v, const char* key) {
    if (v.is_string()) return Ratio::parse(v.get<std::string>());
    if (!v.is_number()) throw ParseError("expected a number", 0, key);
    return Ratio::from_double(v.get<double>());
  };
  auto path = [&](const json& v, const std::string& key) { return base / as_string(v, key); };
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "schema") config.schema = path(v, k);
    else if (k == "kb") config.kb = path(v, k);
    else if (k == "state") config.state = path(v, k);
    else if (k == "out") config.out = path(v, k);
    else if (k == "minsup") config.minsup = ratio(v, "minsup");
    else if (k == "budget") config.budget = v.is_string() ? parse_byte_size(v.get<std::string>()) : as_unsigned(v, k);
    else if (k == "maintenance_coefficient") config.cost.maintenance_coefficient = ratio(v, "maintenance_coefficient");
    else if (k == "between_fraction") config.cost.between_fraction = ratio(v, "between_fraction");
    else if (k == "bitmap_limit") config.cost.bitmap_limit = as_unsigned(v, k);
    else if (k == "retention_batches") config.retention_batches = as_unsigned(v, k);
    else if (k == "report_format") config.report_format = as_string(v, k);
  }
}

// One transaction id per line; blank lines and '#' comments ignored.
inline std::set<std::string> load_removed_ids(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    // ids contain '#', so only whole-line comments
    if (start < line.size() && line[start] != '#') ids.insert(line.substr(start));
  }
  return ids;
}

namespace detail {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

inline std::string human_bytes(std::uint64_t b) {
  static const char* units[] = {"B", "KB", "MB", "GB", "TB"};
  double v = static_cast<double>(b);
  int u = 0;
  while (v >= 1024.0 && u < 4) {
    v /= 1024.0;
    ++u;
  }
  std::ostringstream s;
  s << std::fixed << std::setprecision(u == 0 ? 0 : 1) << v << " " << units[u];
  return s.str();
}

}  // namespace detail

inline int cmd_init(const AdvisorConfig& config, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    validate(config);
    const StarSchema schema = load_schema(config.schema);
    (void)schema;
    const bool exists = std::filesystem::exists(config.kb) || std::filesystem::exists(config.state);
    if (exists && !config.force) {
      throw ValidationError("advisor state already exists ('" + config.kb.string() + "' / '" + config.state.string() +
                            "'); use --force to reset it");
    }
    FileLock lock(config.kb);
    KnowledgeBase kb = empty_knowledge_base(MiningParameters{config.minsup.value_or(Ratio(1, 20))});
    AdvisorState state;
    state.budget = config.budget;
    save_knowledge_base(kb, config.kb);
    save_state(state, config.state);
    out << "initialized knowledge base '" << config.kb.string() << "' (version 0, minsup "
        << kb.parameters.minsup.to_double() << ") and state '" << config.state.string() << "'\n";
    return kExitOk;
  });
}

struct RecommendPaths {
  std::filesystem::path report;
  std::filesystem::path ddl;
};

inline int cmd_recommend(const AdvisorConfig& config, const std::filesystem::path& workload_path,
                         const std::optional<std::filesystem::path>& removed_path, std::ostream& out,
                         std::ostream& err) {
  return detail::guarded(err, [&] {
    validate(config);
    FileLock lock(config.kb);
    const StarSchema schema = load_schema(config.schema);
    if (!std::filesystem::exists(config.kb) || !std::filesystem::exists(config.state)) {
      throw ValidationError("advisor state not initialized; run 'init' first");
    }
    KnowledgeBase kb = load_knowledge_base(config.kb);
    AdvisorState state = load_state(config.state);
    if (config.minsup) kb.parameters.minsup = *config.minsup;

    const std::uint64_t budget = config.budget ? *config.budget
                                 : state.budget ? *state.budget
                                                : throw ValidationError("no storage budget given (--budget)");
    const std::uint64_t cycle = kb.version + 1;

    // Ids are labelled by file stem and content hash: re-submitting a file
    // that is already part of the workload refreshes it instead of adding it.
    const std::string text = detail::read_file(workload_path);
    DeltaBatch delta;
    delta.added = parse_workload(text, schema, workload_path.stem().string() + "." + hex8(fnv1a32(text)));
    delta.added.source = workload_path.string();
    for (const auto& d : delta.added.diagnostics) err << "warning: " << d << "\n";
    if (removed_path) delta.removed_ids = load_removed_ids(*removed_path);

    std::set<std::string> present;
    for (const auto& q : state.workload) present.insert(q.id);
    std::set<std::string> refreshed;
    std::erase_if(delta.added.queries, [&](const AnalyticalQuery& q) {
      if (!present.contains(q.id) || delta.removed_ids.contains(q.id)) return false;
      refreshed.insert(q.id);
      return true;
    });
    if (!refreshed.empty()) {
      err << "warning: " << refreshed.size() << " quer" << (refreshed.size() == 1 ? "y" : "ies")
          << " already in the workload; kept without re-adding\n";
    }
    if (config.retention_batches) {
      for (const auto& q : state.workload) {
        if (q.cycle + *config.retention_batches <= cycle && !refreshed.contains(q.id)) delta.removed_ids.insert(q.id);
      }
    }

    const WorkloadBatch stored = restore_workload(state.workload, schema);
    const IndexConfiguration current = rematerialize(state.configuration, schema, config.cost);
    CycleResult result = run_cycle(kb, delta, current, stored, schema, config.cost, budget);
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    const Recommendation& rec = result.recommendation;

    AdvisorState next;
    next.budget = state.budget;
    next.configuration = result.configuration;
    for (const auto& q : state.workload) {
      if (delta.removed_ids.contains(q.id)) continue;
      next.workload.push_back(q);
      if (refreshed.contains(q.id)) next.workload.back().cycle = cycle;
    }
    for (const auto& q : delta.added.queries) next.workload.push_back({q.id, q.text, q.weight, cycle});
    next.history = state.history;
    next.history.push_back(make_cycle_record(cycle, rec));

    std::filesystem::create_directories(config.out);
    const auto report_path = config.out / (config.report_format == "csv" ? "report.csv" : "report.json");
    const auto ddl_path = config.out / "changes.sql";
    if (config.report_format == "csv") {
      atomic_write(report_path, std::string(kCycleCsvHeader) + "\n" + csv_row(next.history.back()) + "\n");
    } else {
      json report = report_json(rec, result.knowledge_base.dictionary());
      report["cycle"] = cycle;
      atomic_write(report_path, report.dump(2) + "\n");
    }
    atomic_write(ddl_path, rec.ddl);

    // Both files are staged before either replaces its predecessor.
    check_invariants(result.knowledge_base);
    const auto kb_tmp = write_temp_file(config.kb, serialize_knowledge_base(result.knowledge_base));
    const auto state_tmp = write_temp_file(config.state, serialize_state(next));
    commit_file(kb_tmp, config.kb);
    commit_file(state_tmp, config.state);

    out << "cycle " << cycle << ": " << delta.added.queries.size() << " queries added ("
        << delta.added.skipped << " skipped), " << delta.removed_ids.size() << " removed; "
        << rec.queries << " in workload\n";
    out << "  itemsets: " << rec.outcome.emerged.size() << " emerged, " << rec.outcome.declined.size()
        << " declined, " << rec.outcome.retained.size() << " retained\n";
    out << "  candidates: " << rec.candidates.size() << ", selected: " << rec.selected.indexes.size() << " ("
        << detail::human_bytes(rec.selected.total_size) << " of " << detail::human_bytes(budget) << ")\n";
    out << std::fixed << std::setprecision(1) << "  estimated cost: " << rec.baseline_cost.pages
        << " pages unindexed, " << rec.recommended_cost.pages << " pages recommended\n";
    out << "  changes: " << rec.diff.to_create.size() << " create, " << rec.diff.to_drop.size() << " drop -> "
        << ddl_path.string() << "\n";
    for (const auto& d : rec.dropped_beneficial) {
      out << "  note: dropping declined index " << d.name << " that still had positive estimated benefit\n";
    }
    out << "  report: " << report_path.string() << "\n";
    return kExitOk;
  });
}

inline int cmd_evaluate(const AdvisorConfig& config, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const AdvisorState state = load_state(config.state);
    if (state.history.empty()) throw ValidationError("no recommendation cycle recorded yet");

    std::filesystem::create_directories(config.out);
    const auto csv_path = config.out / "evaluation.csv";
    std::uint64_t last_written = 0;
    bool has_header = false;
    if (std::filesystem::exists(csv_path)) {
      std::istringstream in(detail::read_file(csv_path));
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == kCycleCsvHeader) {
          has_header = true;
          continue;
        }
        std::uint64_t c = 0;
        const auto field = std::string_view(line).substr(0, line.find(','));
        const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), c);
        if (ec != std::errc() || end != field.data() + field.size()) {
          throw ValidationError("'" + csv_path.string() + "' has a malformed row: " + line);
        }
        last_written = std::max(last_written, c);
      }
    }
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw IoError("cannot open '" + csv_path.string() + "'");
    if (!has_header) csv << kCycleCsvHeader << "\n";
    out << kCycleCsvHeader << "\n";
    for (const auto& r : state.history) {
      if (r.cycle > last_written) csv << csv_row(r) << "\n";
      out << csv_row(r) << "\n";
    }
    if (!csv) throw IoError("cannot write '" + csv_path.string() + "'");
    return kExitOk;
  });
}

inline int cmd_status(const AdvisorConfig& config, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!std::filesystem::exists(config.kb)) throw ValidationError("knowledge base '" + config.kb.string() + "' not found");
    if (!std::filesystem::exists(config.state)) throw ValidationError("state '" + config.state.string() + "' not found");
    const KnowledgeBase kb = load_knowledge_base(config.kb);
    const AdvisorState state = load_state(config.state);
    const std::optional<std::uint64_t> budget = config.budget ? config.budget : state.budget;
    out << "knowledge base: " << config.kb.string() << "\n";
    out << "  version: " << kb.version << "\n";
    out << "  minsup: " << kb.parameters.minsup.to_double() << " (threshold "
        << kb.parameters.threshold(kb.transaction_weight()) << ")\n";
    out << "  transactions: " << kb.database.size() << " (weight " << kb.transaction_weight() << ")\n";
    out << "  items: " << kb.dictionary().size() << "\n";
    out << "  maximal itemsets: " << kb.maximal.size() << "\n";
    out << "  updated: " << kb.updated_at << "\n";
    out << "configuration: " << state.configuration.indexes.size() << " index(es), "
        << detail::human_bytes(state.configuration.total_size);
    if (budget) out << " of " << detail::human_bytes(*budget) << " budget";
    out << "\n";
    for (const auto& i : state.configuration.indexes) out << "  " << i.name << "\n";
    out << "cycles recorded: " << state.history.size() << "\n";
    return kExitOk;
  });
}

}  // namespace dynidx
