#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dynidx/advisor.hpp"
#include "dynidx/context.hpp"
#include "dynidx/error.hpp"
#include "dynidx/miner.hpp"
#include "dynidx/schema.hpp"
#include "dynidx/workload.hpp"

namespace dynidx {

namespace detail {

inline void write_all(int fd, const std::string& content, const std::filesystem::path& path) {
  const char* p = content.data();
  std::size_t left = content.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("cannot write '" + path.string() + "': " + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

}  // namespace detail

// First half of an atomic replace: content lands in a sibling temp file,
// flushed to disk. The target is untouched until commit_file().
inline std::filesystem::path write_temp_file(const std::filesystem::path& target, const std::string& content) {
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot create '" + tmp.string() + "': " + std::strerror(errno));
  try {
    detail::write_all(fd, content, tmp);
    if (::fsync(fd) != 0) throw IoError("cannot sync '" + tmp.string() + "': " + std::strerror(errno));
  } catch (...) {
    ::close(fd);
    std::filesystem::remove(tmp);
    throw;
  }
  ::close(fd);
  return tmp;
}

inline void commit_file(const std::filesystem::path& temp, const std::filesystem::path& target) {
  std::error_code ec;
  std::filesystem::rename(temp, target, ec);
  if (ec) throw IoError("cannot rename '" + temp.string() + "' to '" + target.string() + "': " + ec.message());
  std::filesystem::path dir = target.parent_path();
  if (dir.empty()) dir = ".";
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

inline void atomic_write(const std::filesystem::path& target, const std::string& content) {
  commit_file(write_temp_file(target, content), target);
}

// Exclusive advisory lock on `<path>.lock`, held for the object's lifetime.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) : path_(path) {
    path_ += ".lock";
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file '" + path_.string() + "': " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw IoError("'" + path_.string() + "' is held by another advisory cycle");
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Knowledge base file

inline json to_json(const KnowledgeBase& kb) {
  json dict = json::array();
  for (const auto& a : kb.dictionary().items()) dict.push_back(a.to_string());
  json txs = json::array();
  for (const auto& row : kb.database.rows()) {
    txs.push_back({{"id", row->id}, {"items", row->items}, {"weight", row->weight}});
  }
  json maximal = json::array();
  for (const auto& m : kb.maximal) maximal.push_back({{"items", m.items}, {"support", m.support}});
  return {{"version", kb.version},
          {"minsup", kb.parameters.minsup.to_double()},
          {"dictionary", dict},
          {"transactions", txs},
          {"maximal", maximal},
          {"created_at", kb.created_at},
          {"updated_at", kb.updated_at}};
}

inline std::string serialize_knowledge_base(const KnowledgeBase& kb) { return to_json(kb).dump(1) + "\n"; }

namespace detail {

inline KnowledgeBase parse_knowledge_base_document(std::string_view text) {
  const json doc = parse_json(text);
  as_object(doc, "knowledge base");
  reject_unknown_keys(doc, {"version", "minsup", "dictionary", "transactions", "maximal", "created_at", "updated_at"},
                      "knowledge base");
  KnowledgeBase kb;
  kb.version = as_unsigned(require(doc, "version", "knowledge base"), "version");
  const json& ms = require(doc, "minsup", "knowledge base");
  if (!ms.is_number()) throw ParseError("expected a number", 0, "minsup");
  kb.parameters.minsup = Ratio::from_double(ms.get<double>());
  if (auto it = doc.find("created_at"); it != doc.end()) kb.created_at = as_string(*it, "created_at");
  kb.updated_at = as_string(require(doc, "updated_at", "knowledge base"), "updated_at");

  ItemDictionary dictionary;
  const json& dict = as_array(require(doc, "dictionary", "knowledge base"), "dictionary");
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const AttributeRef a = AttributeRef::parse(as_string(dict[i], "dictionary[" + std::to_string(i) + "]"));
    if (dictionary.intern(a) != i) throw InvariantViolation("dictionary invariant: duplicate attribute '" + a.to_string() + "'");
  }

  auto read_items = [](const json& v, const std::string& where) {
    as_array(v, where);
    std::vector<ItemId> items;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::uint64_t id = as_unsigned(v[k], where + "[" + std::to_string(k) + "]");
      if (id > std::numeric_limits<ItemId>::max()) throw ParseError("item id out of range", 0, where);
      items.push_back(static_cast<ItemId>(id));
    }
    return items;
  };

  std::vector<Transaction> rows;
  const json& txs = as_array(require(doc, "transactions", "knowledge base"), "transactions");
  for (std::size_t i = 0; i < txs.size(); ++i) {
    const std::string at = "transactions[" + std::to_string(i) + "]";
    as_object(txs[i], at);
    reject_unknown_keys(txs[i], {"id", "items", "weight"}, at);
    const std::uint64_t weight = as_unsigned(require(txs[i], "weight", at), at + ".weight");
    if (weight == 0) throw InvariantViolation("weight invariant: " + at + " has weight 0");
    rows.push_back(make_transaction(as_string(require(txs[i], "id", at), at + ".id"),
                                    read_items(require(txs[i], "items", at), at + ".items"), weight));
  }
  try {
    kb.database = TransactionDatabase(std::move(dictionary), std::move(rows));
  } catch (const ValidationError& e) {
    throw InvariantViolation(std::string("transaction invariant: ") + e.what());
  }

  const json& maximal = as_array(require(doc, "maximal", "knowledge base"), "maximal");
  for (std::size_t i = 0; i < maximal.size(); ++i) {
    const std::string at = "maximal[" + std::to_string(i) + "]";
    as_object(maximal[i], at);
    reject_unknown_keys(maximal[i], {"items", "support"}, at);
    kb.maximal.push_back({read_items(require(maximal[i], "items", at), at + ".items"),
                          as_unsigned(require(maximal[i], "support", at), at + ".support")});
  }
  check_invariants(kb);
  const std::size_t before = kb.maximal.size();
  canonicalize(kb.maximal);
  if (kb.maximal.size() != before) throw InvariantViolation("antichain invariant: duplicate maximal itemset");
  return kb;
}

// A file that cannot be read back as a well-formed document is corrupt.
template <class F>
auto as_corruption(const char* what, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    throw InvariantViolation(std::string(what) + " format invariant: " + e.what());
  } catch (const ValidationError& e) {
    throw InvariantViolation(std::string(what) + " format invariant: " + e.what());
  }
}

}  // namespace detail

inline KnowledgeBase parse_knowledge_base(std::string_view text) {
  return detail::as_corruption("knowledge base", [&] { return detail::parse_knowledge_base_document(text); });
}

inline KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  return parse_knowledge_base(detail::read_file(path));
}

inline void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path) {
  check_invariants(kb);
  atomic_write(path, serialize_knowledge_base(kb));
}

// Full equality; `ignore_meta` skips version and timestamps.
inline bool same_knowledge_base(const KnowledgeBase& a, const KnowledgeBase& b, bool ignore_meta = false) {
  if (!ignore_meta && (a.version != b.version || a.created_at != b.created_at || a.updated_at != b.updated_at)) {
    return false;
  }
  if (!(a.parameters.minsup == b.parameters.minsup) || !identical(a.maximal, b.maximal)) return false;
  if (!same_contents(a.database, b.database)) return false;
  for (std::size_t i = 0; i < a.database.size(); ++i)
    if (a.database.rows()[i]->id != b.database.rows()[i]->id) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Configuration-state file: current index configuration, the queries behind
// the knowledge base's transactions, and per-cycle history.

struct StoredQuery {
  std::string id;
  std::string sql;
  std::uint64_t weight = 1;
  std::uint64_t cycle = 0;  // cycle that ingested it

  bool operator==(const StoredQuery&) const = default;
};

struct CycleRecord {
  std::uint64_t cycle = 0;
  std::uint64_t queries = 0;
  std::uint64_t emerged = 0;
  std::uint64_t declined = 0;
  std::uint64_t retained = 0;
  std::uint64_t candidates = 0;
  std::uint64_t selected = 0;
  std::uint64_t total_index_bytes = 0;
  double baseline_cost_pages = 0.0;
  double recommended_cost_pages = 0.0;
  double selection_ms = 0.0;
  double update_ms = 0.0;

  bool operator==(const CycleRecord&) const = default;
};

inline constexpr std::string_view kCycleCsvHeader =
    "cycle,queries,emerged,declined,retained,candidates,selected,total_index_bytes,baseline_cost_pages,"
    "recommended_cost_pages,selection_ms,update_ms";

inline std::string csv_row(const CycleRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%.6f,%.6f,%.3f,%.3f",
                static_cast<unsigned long long>(r.cycle), static_cast<unsigned long long>(r.queries),
                static_cast<unsigned long long>(r.emerged), static_cast<unsigned long long>(r.declined),
                static_cast<unsigned long long>(r.retained), static_cast<unsigned long long>(r.candidates),
                static_cast<unsigned long long>(r.selected), static_cast<unsigned long long>(r.total_index_bytes),
                r.baseline_cost_pages, r.recommended_cost_pages, r.selection_ms, r.update_ms);
  return buf;
}

inline CycleRecord make_cycle_record(std::uint64_t cycle, const Recommendation& rec) {
  CycleRecord r;
  r.cycle = cycle;
  r.queries = rec.queries;
  r.emerged = rec.outcome.emerged.size();
  r.declined = rec.outcome.declined.size();
  r.retained = rec.outcome.retained.size();
  r.candidates = rec.candidates.size();
  r.selected = rec.selected.indexes.size();
  r.total_index_bytes = rec.selected.total_size;
  r.baseline_cost_pages = rec.baseline_cost.pages;
  r.recommended_cost_pages = rec.recommended_cost.pages;
  r.selection_ms = rec.timings.selection_total_ms();
  r.update_ms = rec.timings.update_ms;
  return r;
}

struct AdvisorState {
  IndexConfiguration configuration;
  std::vector<StoredQuery> workload;
  std::vector<CycleRecord> history;
  std::optional<std::uint64_t> budget;

  bool operator==(const AdvisorState&) const = default;
};

inline json to_json(const AdvisorState& state) {
  json indexes = json::array();
  for (const auto& c : state.configuration.indexes) {
    json attrs = json::array();
    for (const auto& a : c.itemset) attrs.push_back(a.to_string());
    indexes.push_back({{"name", c.name}, {"attributes", attrs}, {"size_bytes", c.size}});
  }
  json workload = json::array();
  for (const auto& q : state.workload) {
    workload.push_back({{"id", q.id}, {"sql", q.sql}, {"weight", q.weight}, {"cycle", q.cycle}});
  }
  json history = json::array();
  for (const auto& r : state.history) {
    history.push_back({{"cycle", r.cycle},
                       {"queries", r.queries},
                       {"emerged", r.emerged},
                       {"declined", r.declined},
                       {"retained", r.retained},
                       {"candidates", r.candidates},
                       {"selected", r.selected},
                       {"total_index_bytes", r.total_index_bytes},
                       {"baseline_cost_pages", r.baseline_cost_pages},
                       {"recommended_cost_pages", r.recommended_cost_pages},
                       {"selection_ms", r.selection_ms},
                       {"update_ms", r.update_ms}});
  }
  json out = {{"indexes", indexes}, {"total_size_bytes", state.configuration.total_size}, {"workload", workload},
              {"history", history}};
  if (state.budget) out["budget"] = *state.budget;
  return out;
}

inline std::string serialize_state(const AdvisorState& state) { return to_json(state).dump(1) + "\n"; }

namespace detail {

inline AdvisorState parse_state_document(std::string_view text) {
  const json doc = parse_json(text);
  as_object(doc, "state");
  reject_unknown_keys(doc, {"indexes", "total_size_bytes", "workload", "history", "budget"}, "state");
  AdvisorState state;
  if (auto it = doc.find("budget"); it != doc.end()) state.budget = as_unsigned(*it, "budget");

  std::vector<CandidateIndex> indexes;
  const json& idx = as_array(require(doc, "indexes", "state"), "indexes");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::string at = "indexes[" + std::to_string(i) + "]";
    as_object(idx[i], at);
    reject_unknown_keys(idx[i], {"name", "attributes", "size_bytes"}, at);
    CandidateIndex c;
    c.name = as_string(require(idx[i], "name", at), at + ".name");
    c.size = as_unsigned(require(idx[i], "size_bytes", at), at + ".size_bytes");
    const json& attrs = as_array(require(idx[i], "attributes", at), at + ".attributes");
    for (const auto& a : attrs) c.itemset.insert(AttributeRef::parse(as_string(a, at + ".attributes")));
    if (c.itemset.empty()) throw InvariantViolation("configuration invariant: " + at + " has no attributes");
    indexes.push_back(std::move(c));
  }
  const std::size_t count = indexes.size();
  state.configuration = make_configuration(std::move(indexes));
  if (state.configuration.indexes.size() != count) {
    throw InvariantViolation("configuration invariant: duplicate index itemsets");
  }
  if (auto it = doc.find("total_size_bytes"); it != doc.end() &&
                                              as_unsigned(*it, "total_size_bytes") != state.configuration.total_size) {
    throw InvariantViolation("configuration invariant: total_size_bytes does not equal the sum of index sizes");
  }

  const json& wl = as_array(require(doc, "workload", "state"), "workload");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < wl.size(); ++i) {
    const std::string at = "workload[" + std::to_string(i) + "]";
    as_object(wl[i], at);
    reject_unknown_keys(wl[i], {"id", "sql", "weight", "cycle"}, at);
    StoredQuery q;
    q.id = as_string(require(wl[i], "id", at), at + ".id");
    q.sql = as_string(require(wl[i], "sql", at), at + ".sql");
    q.weight = as_unsigned(require(wl[i], "weight", at), at + ".weight");
    q.cycle = as_unsigned(require(wl[i], "cycle", at), at + ".cycle");
    if (q.weight == 0) throw InvariantViolation("weight invariant: " + at + " has weight 0");
    if (!ids.insert(q.id).second) throw InvariantViolation("workload invariant: duplicate query id '" + q.id + "'");
    state.workload.push_back(std::move(q));
  }

  const json& hist = as_array(require(doc, "history", "state"), "history");
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const std::string at = "history[" + std::to_string(i) + "]";
    const json& h = as_object(hist[i], at);
    reject_unknown_keys(h, {"cycle", "queries", "emerged", "declined", "retained", "candidates", "selected",
                            "total_index_bytes", "baseline_cost_pages", "recommended_cost_pages", "selection_ms",
                            "update_ms"},
                        at);
    auto num = [&](const char* key) {
      const json& v = require(h, key, at);
      if (!v.is_number()) throw ParseError("expected a number", 0, at + "." + key);
      return v.get<double>();
    };
    CycleRecord r;
    r.cycle = as_unsigned(require(h, "cycle", at), at + ".cycle");
    r.queries = as_unsigned(require(h, "queries", at), at + ".queries");
    r.emerged = as_unsigned(require(h, "emerged", at), at + ".emerged");
    r.declined = as_unsigned(require(h, "declined", at), at + ".declined");
    r.retained = as_unsigned(require(h, "retained", at), at + ".retained");
    r.candidates = as_unsigned(require(h, "candidates", at), at + ".candidates");
    r.selected = as_unsigned(require(h, "selected", at), at + ".selected");
    r.total_index_bytes = as_unsigned(require(h, "total_index_bytes", at), at + ".total_index_bytes");
    r.baseline_cost_pages = num("baseline_cost_pages");
    r.recommended_cost_pages = num("recommended_cost_pages");
    r.selection_ms = num("selection_ms");
    r.update_ms = num("update_ms");
    state.history.push_back(r);
  }
  return state;
}

}  // namespace detail

inline AdvisorState parse_state(std::string_view text) {
  return detail::as_corruption("state", [&] { return detail::parse_state_document(text); });
}

inline AdvisorState load_state(const std::filesystem::path& path) { return parse_state(detail::read_file(path)); }

inline void save_state(const AdvisorState& state, const std::filesystem::path& path) {
  atomic_write(path, serialize_state(state));
}

// Re-parses stored SQL against `schema`, restoring ids and weights.
inline WorkloadBatch restore_workload(const std::vector<StoredQuery>& stored, const StarSchema& schema) {
  WorkloadBatch batch;
  batch.source = "state";
  for (const auto& s : stored) {
    AnalyticalQuery q;
    try {
      q = parse_query(s.sql, schema);
    } catch (const Error& e) {
      throw InvariantViolation("stored query '" + s.id + "' no longer parses against the schema: " + e.what());
    }
    q.id = s.id;
    q.weight = s.weight;
    batch.queries.push_back(std::move(q));
  }
  return batch;
}

// Fills candidate names and sizes for a configuration read from disk.
inline IndexConfiguration rematerialize(const IndexConfiguration& config, const StarSchema& schema,
                                        const CostParameters& params) {
  std::vector<CandidateIndex> out;
  for (const auto& c : config.indexes) out.push_back(make_candidate(c.itemset, schema, params));
  return make_configuration(std::move(out));
}

}  // namespace dynidx
