// dynidx: bitmap join index advisor driven by incremental maximal itemset mining.
//
//   dynidx [options] init
//   dynidx [options] recommend <workload.sql> [--removed ids.txt]
//   dynidx [options] evaluate
//   dynidx [options] status

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dynidx/dynidx.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> schema, kb, state, out, minsup, budget, mu, between, report_format;
  std::optional<std::uint64_t> bitmap_limit, retention;
  bool force = false;
};

dynidx::AdvisorConfig resolve(const Flags& f) {
  dynidx::AdvisorConfig c;
  if (!f.config.empty()) {
    const std::filesystem::path path = f.config;
    dynidx::apply_config_file(c, dynidx::detail::parse_json(dynidx::detail::read_file(path)), path.parent_path());
  }
  if (f.schema) c.schema = *f.schema;
  if (f.kb) c.kb = *f.kb;
  if (f.state) c.state = *f.state;
  if (f.out) c.out = *f.out;
  if (f.minsup) c.minsup = dynidx::Ratio::parse(*f.minsup);
  if (f.budget) c.budget = dynidx::parse_byte_size(*f.budget);
  if (f.mu) c.cost.maintenance_coefficient = dynidx::Ratio::parse(*f.mu);
  if (f.between) c.cost.between_fraction = dynidx::Ratio::parse(*f.between);
  if (f.bitmap_limit) c.cost.bitmap_limit = *f.bitmap_limit;
  if (f.retention) c.retention_batches = *f.retention;
  if (f.report_format) c.report_format = *f.report_format;
  c.force = f.force;
  dynidx::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bitmap join index advisor for star-schema warehouses"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON config file (flags override its keys)");
  app.add_option("--schema", f.schema, "Star schema JSON file");
  app.add_option("--kb", f.kb, "Knowledge base JSON file");
  app.add_option("--state", f.state, "Configuration state JSON file");
  app.add_option("--out", f.out, "Output directory for reports, DDL and CSV");
  app.add_option("--minsup", f.minsup, "Relative minimum support in (0, 1] (default 0.05)");
  app.add_option("--budget", f.budget, "Storage budget, e.g. 512MB (KB/MB/GB are powers of 1024)");
  app.add_option("--maintenance-coefficient", f.mu, "Maintenance pages per index page (default 0.1)");
  app.add_option("--between-fraction", f.between, "Domain fraction selected by BETWEEN (default 0.1)");
  app.add_option("--bitmap-limit", f.bitmap_limit, "Max bitmaps per index before it is infeasible");
  app.add_option("--retention", f.retention, "Keep only the last N workload batches");
  app.add_option("--report-format", f.report_format, "Report format: json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--force", f.force, "Allow init to overwrite existing state");

  auto* init = app.add_subcommand("init", "Create an empty knowledge base and configuration state");
  std::string workload;
  std::optional<std::string> removed;
  auto* recommend = app.add_subcommand("recommend", "Run one advisory cycle on a workload log");
  recommend->add_option("workload", workload, "Workload log (SQL statements terminated by ';')")->required();
  recommend->add_option("--removed", removed, "File listing transaction ids to remove, one per line");
  auto* evaluate = app.add_subcommand("evaluate", "Write per-cycle metrics as CSV");
  auto* status = app.add_subcommand("status", "Show knowledge base and configuration summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dynidx::kExitOk : dynidx::kExitUserError;
  }

  dynidx::AdvisorConfig config;
  try {
    config = resolve(f);
  } catch (const dynidx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dynidx::kExitUserError;
  }

  if (init->parsed()) return dynidx::cmd_init(config, std::cout, std::cerr);
  if (recommend->parsed()) {
    std::optional<std::filesystem::path> removed_path;
    if (removed) removed_path = *removed;
    return dynidx::cmd_recommend(config, workload, removed_path, std::cout, std::cerr);
  }
  if (evaluate->parsed()) return dynidx::cmd_evaluate(config, std::cout, std::cerr);
  if (status->parsed()) return dynidx::cmd_status(config, std::cout, std::cerr);
  return dynidx::kExitUserError;
}
