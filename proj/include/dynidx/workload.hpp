#pragma once

// Analytical query model and the restricted SQL grammar it is parsed from:
//
//   SELECT [DISTINCT] <item, ...> FROM <table [alias], ...> [WHERE <pred AND ...>]
//          [GROUP BY <attr, ...>] [ORDER BY <anything>]
//
// Items are plain attributes, `*`, or SUM/AVG/MIN/MAX/COUNT over a fact
// attribute. Predicates are `attr = literal`, `attr IN (literals)`,
// `attr BETWEEN lit AND lit` over dimension attributes, and star-join
// equalities `fact.fk = dim.pk`. `[INNER] JOIN t ON ...` folds into the
// conjunction. Anything else raises UnsupportedConstruct.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dynidx/error.hpp"
#include "dynidx/hash.hpp"
#include "dynidx/schema.hpp"

namespace dynidx {

enum class Aggregate { sum, avg, min, max, count };

inline std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::sum: return "SUM";
    case Aggregate::avg: return "AVG";
    case Aggregate::min: return "MIN";
    case Aggregate::max: return "MAX";
    case Aggregate::count: return "COUNT";
  }
  return "?";
}

struct Measure {
  Aggregate function = Aggregate::sum;
  std::optional<AttributeRef> attribute;  // nullopt for COUNT(*)

  bool operator==(const Measure&) const = default;
};

enum class PredicateKind { equality, in_list, between };

struct RestrictionPredicate {
  AttributeRef attribute;
  PredicateKind kind = PredicateKind::equality;
  // 1 for equality, list length for IN. BETWEEN carries 1 here; its effective
  // count is derived from CostParameters::between_fraction.
  std::uint64_t value_count = 1;

  bool operator==(const RestrictionPredicate&) const = default;
};

struct AnalyticalQuery {
  std::string id;
  std::string text;
  AttributeSet grouping;
  std::vector<Measure> measures;
  std::vector<RestrictionPredicate> restrictions;
  std::set<std::string> joined_dimensions;
  std::uint64_t weight = 1;

  bool operator==(const AnalyticalQuery&) const = default;
};

struct WorkloadBatch {
  std::vector<AnalyticalQuery> queries;
  std::size_t skipped = 0;
  std::string source;
  std::vector<std::string> diagnostics;
};

// G(q) ∪ attributes(R(q))
inline AttributeSet extract_indexable(const AnalyticalQuery& query) {
  AttributeSet out = query.grouping;
  for (const auto& r : query.restrictions) out.insert(r.attribute);
  return out;
}

namespace sql {

enum class TokenKind { identifier, number, string, symbol, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  std::string upper;
};

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto push = [&](TokenKind k, std::string t) {
    std::string u = upper(t);
    out.push_back(Token{k, std::move(t), std::move(u)});
  };
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      while (i < n && text[i] != '\n') ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i;
      while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_' || text[i] == '$')) ++i;
      push(TokenKind::identifier, std::string(text.substr(start, i - start)));
    } else if (c == '"') {
      const std::size_t start = ++i;
      while (i < n && text[i] != '"') ++i;
      if (i >= n) throw ParseError("unterminated quoted identifier");
      push(TokenKind::identifier, std::string(text.substr(start, i - start)));
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      const std::size_t start = i;
      while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '.')) ++i;
      push(TokenKind::number, std::string(text.substr(start, i - start)));
    } else if (c == '\'') {
      std::string value;
      ++i;
      for (;;) {
        if (i >= n) throw ParseError("unterminated string literal");
        if (text[i] == '\'') {
          if (i + 1 < n && text[i + 1] == '\'') {
            value += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value += text[i++];
      }
      out.push_back(Token{TokenKind::string, value, value});
    } else {
      static constexpr std::string_view two[] = {"<=", ">=", "<>", "!=", "||"};
      std::string sym(1, c);
      for (auto t : two) {
        if (text.substr(i, 2) == t) {
          sym = std::string(t);
          break;
        }
      }
      i += sym.size();
      push(TokenKind::symbol, std::move(sym));
    }
  }
  out.push_back(Token{TokenKind::end, "<end>", "<end>"});
  return out;
}

struct ColumnRef {
  std::optional<std::string> qualifier;
  std::string name;
  std::string spelled;
};

struct RawPredicate {
  enum class Kind { join, equality, in_list, between } kind;
  ColumnRef left;
  ColumnRef right;  // join only
  std::uint64_t value_count = 1;
};

struct RawMeasure {
  Aggregate function;
  std::optional<ColumnRef> column;
};

struct RawTable {
  std::string name;
  std::optional<std::string> alias;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  void parse() {
    if (peek().kind == TokenKind::identifier && peek().upper != "SELECT") unsupported("non-query statement");
    expect_keyword("SELECT");
    accept_keyword("DISTINCT");
    parse_select_list();
    expect_keyword("FROM");
    parse_from_list();
    if (accept_keyword("WHERE")) parse_conjunction();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        if (peek().kind == TokenKind::number) unsupported("positional GROUP BY");
        group_.push_back(parse_column());
      } while (accept_symbol(","));
    }
    if (peek().upper == "HAVING" && peek().kind == TokenKind::identifier) unsupported("HAVING clause");
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      // ORDER BY carries no indexing information; only a nested query is rejected.
      while (peek().kind != TokenKind::end) {
        if (peek().upper == "SELECT") unsupported("subquery");
        ++pos_;
      }
    }
    if (peek().kind != TokenKind::end) {
      const auto& t = peek();
      if (t.upper == "UNION" || t.upper == "INTERSECT" || t.upper == "EXCEPT" || t.upper == "MINUS") {
        unsupported("set operation");
      }
      if (t.upper == "OR") unsupported("OR at top level");
      unsupported("unexpected token");
    }
  }

  std::vector<ColumnRef> plain_columns_;
  std::vector<RawMeasure> measures_;
  std::vector<RawTable> tables_;
  std::vector<RawPredicate> predicates_;
  std::vector<ColumnRef> group_;

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t p = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[p];
  }

  [[noreturn]] void unsupported(const std::string& what) const { throw UnsupportedConstruct(what, peek().text); }

  [[noreturn]] void syntax(const std::string& what) const {
    throw ParseError(what + " near '" + peek().text + "'");
  }

  bool is_keyword(std::string_view kw) const { return peek().kind == TokenKind::identifier && peek().upper == kw; }

  bool accept_keyword(std::string_view kw) {
    if (!is_keyword(kw)) return false;
    ++pos_;
    return true;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) syntax("expected " + std::string(kw));
  }

  bool accept_symbol(std::string_view s) {
    if (peek().kind != TokenKind::symbol || peek().text != s) return false;
    ++pos_;
    return true;
  }

  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) syntax("expected '" + std::string(s) + "'");
  }

  static bool reserved(std::string_view upper) {
    static const std::set<std::string, std::less<>> words = {
        "SELECT", "FROM",  "WHERE", "GROUP", "BY",     "ORDER",  "HAVING", "AND",     "OR",
        "NOT",    "IN",    "BETWEEN", "AS",  "JOIN",   "INNER",  "LEFT",   "RIGHT",   "FULL",
        "OUTER",  "CROSS", "NATURAL", "ON",  "UNION",  "INTERSECT", "EXCEPT", "MINUS", "LIMIT",
        "DISTINCT", "LIKE", "IS",   "NULL",  "EXISTS", "CASE",   "USING"};
    return words.contains(upper);
  }

  bool at_identifier() const { return peek().kind == TokenKind::identifier && !reserved(peek().upper); }

  std::optional<Aggregate> aggregate_keyword() const {
    if (peek().kind != TokenKind::identifier || peek(1).text != "(") return std::nullopt;
    const auto& u = peek().upper;
    if (u == "SUM") return Aggregate::sum;
    if (u == "AVG") return Aggregate::avg;
    if (u == "MIN") return Aggregate::min;
    if (u == "MAX") return Aggregate::max;
    if (u == "COUNT") return Aggregate::count;
    return std::nullopt;
  }

  ColumnRef parse_column() {
    if (!at_identifier()) {
      if (peek().text == "(" && peek(1).upper == "SELECT") {
        ++pos_;
        unsupported("subquery");
      }
      syntax("expected attribute");
    }
    ColumnRef ref;
    ref.name = peek().text;
    ref.spelled = ref.name;
    ++pos_;
    if (accept_symbol(".")) {
      if (!at_identifier()) syntax("expected attribute name");
      ref.qualifier = ref.name;
      ref.name = peek().text;
      ref.spelled += "." + ref.name;
      ++pos_;
    }
    return ref;
  }

  void parse_alias() {
    if (accept_keyword("AS")) {
      if (!at_identifier()) syntax("expected alias");
      ++pos_;
    } else if (at_identifier()) {
      ++pos_;
    }
  }

  void parse_select_list() {
    do {
      if (accept_symbol("*")) continue;
      if (auto agg = aggregate_keyword()) {
        pos_ += 2;
        accept_keyword("DISTINCT");
        RawMeasure m{*agg, std::nullopt};
        if (accept_symbol("*")) {
          if (*agg != Aggregate::count) syntax("'*' is only valid in COUNT");
        } else {
          if (peek().upper == "SELECT") unsupported("subquery");
          if (!at_identifier()) unsupported("expression inside aggregate");
          m.column = parse_column();
        }
        if (!accept_symbol(")")) unsupported("expression inside aggregate");
        measures_.push_back(std::move(m));
        parse_alias();
        continue;
      }
      if (peek().text == "(") {
        if (peek(1).upper == "SELECT") {
          ++pos_;
          unsupported("subquery");
        }
        unsupported("expression in select list");
      }
      if (peek().upper == "CASE") unsupported("CASE expression");
      if (at_identifier() && peek(1).text == "." && peek(2).text == "*") {
        pos_ += 3;
        continue;
      }
      if (peek().kind == TokenKind::number || peek().kind == TokenKind::string) {
        ++pos_;
        parse_alias();
        continue;
      }
      if (at_identifier() && peek(1).text == "(") unsupported("function call");
      plain_columns_.push_back(parse_column());
      if (peek().kind == TokenKind::symbol && peek().text != "," && peek().text != ".") {
        unsupported("expression in select list");
      }
      parse_alias();
    } while (accept_symbol(","));
  }

  RawTable parse_table() {
    if (peek().text == "(") {
      if (peek(1).upper == "SELECT") ++pos_;
      unsupported("subquery in FROM");
    }
    if (!at_identifier()) syntax("expected table name");
    RawTable t{peek().text, std::nullopt};
    ++pos_;
    if (accept_keyword("AS")) {
      if (!at_identifier()) syntax("expected alias");
      t.alias = peek().text;
      ++pos_;
    } else if (at_identifier()) {
      t.alias = peek().text;
      ++pos_;
    }
    return t;
  }

  void parse_from_list() {
    tables_.push_back(parse_table());
    for (;;) {
      if (accept_symbol(",")) {
        tables_.push_back(parse_table());
        continue;
      }
      if (is_keyword("LEFT") || is_keyword("RIGHT") || is_keyword("FULL") || is_keyword("OUTER")) {
        unsupported("outer join");
      }
      if (is_keyword("CROSS") || is_keyword("NATURAL")) unsupported("join without join condition");
      if (is_keyword("INNER") || is_keyword("JOIN")) {
        accept_keyword("INNER");
        expect_keyword("JOIN");
        tables_.push_back(parse_table());
        if (is_keyword("USING")) unsupported("JOIN USING");
        expect_keyword("ON");
        parse_conjunction();
        continue;
      }
      break;
    }
  }

  void parse_conjunction() {
    parse_predicate();
    for (;;) {
      if (accept_keyword("AND")) {
        parse_predicate();
        continue;
      }
      if (is_keyword("OR")) unsupported("OR at top level");
      break;
    }
  }

  void parse_literal() {
    if (is_keyword("DATE") || is_keyword("TIMESTAMP")) {
      if (peek(1).kind == TokenKind::string) {
        pos_ += 2;
        return;
      }
    }
    if (accept_symbol("-") || accept_symbol("+")) {
      if (peek().kind != TokenKind::number) syntax("expected number");
      ++pos_;
      return;
    }
    if (peek().kind == TokenKind::number || peek().kind == TokenKind::string) {
      ++pos_;
      return;
    }
    if (peek().text == "(" && peek(1).upper == "SELECT") {
      ++pos_;
      unsupported("subquery");
    }
    if (is_keyword("NULL")) unsupported("NULL comparison");
    syntax("expected literal");
  }

  bool at_literal() const {
    const auto& t = peek();
    if (t.kind == TokenKind::number || t.kind == TokenKind::string) return true;
    if ((t.upper == "DATE" || t.upper == "TIMESTAMP") && t.kind == TokenKind::identifier &&
        peek(1).kind == TokenKind::string) {
      return true;
    }
    return t.kind == TokenKind::symbol && (t.text == "-" || t.text == "+") && peek(1).kind == TokenKind::number;
  }

  void parse_predicate() {
    if (peek().text == "(" && peek().kind == TokenKind::symbol) {
      if (peek(1).upper == "SELECT") {
        ++pos_;
        unsupported("subquery");
      }
      ++pos_;
      parse_conjunction();
      expect_symbol(")");
      return;
    }
    if (is_keyword("NOT")) unsupported("negated predicate");
    if (is_keyword("EXISTS")) unsupported("subquery");

    if (at_literal()) {
      parse_literal();
      if (!accept_symbol("=")) unsupported("unsupported comparison");
      if (at_literal()) unsupported("literal comparison");
      ColumnRef col = parse_column();
      predicates_.push_back({RawPredicate::Kind::equality, std::move(col), {}, 1});
      return;
    }

    ColumnRef col = parse_column();
    if (accept_symbol("=")) {
      if (at_literal()) {
        parse_literal();
        predicates_.push_back({RawPredicate::Kind::equality, std::move(col), {}, 1});
      } else {
        ColumnRef other = parse_column();
        predicates_.push_back({RawPredicate::Kind::join, std::move(col), std::move(other), 1});
      }
      return;
    }
    if (accept_keyword("IN")) {
      expect_symbol("(");
      if (is_keyword("SELECT")) unsupported("subquery");
      std::uint64_t count = 0;
      do {
        parse_literal();
        ++count;
      } while (accept_symbol(","));
      expect_symbol(")");
      predicates_.push_back({RawPredicate::Kind::in_list, std::move(col), {}, count});
      return;
    }
    if (accept_keyword("BETWEEN")) {
      parse_literal();
      expect_keyword("AND");
      parse_literal();
      predicates_.push_back({RawPredicate::Kind::between, std::move(col), {}, 1});
      return;
    }
    unsupported("unsupported predicate");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

inline std::string normalized(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::end) break;
    if (!out.empty()) out += ' ';
    if (t.kind == TokenKind::string) {
      out += '\'' + t.text + '\'';
    } else if (t.kind == TokenKind::identifier) {
      out += t.upper;
    } else {
      out += t.text;
    }
  }
  return out;
}

class Resolver {
 public:
  Resolver(const StarSchema& schema, const std::vector<RawTable>& tables) : schema_(schema) {
    std::set<std::string> seen;
    for (const auto& t : tables) {
      const TableStats* stats = schema.table(t.name);
      if (stats == nullptr) throw ResolutionError("unknown table '" + t.name + "'");
      if (!seen.insert(stats->name).second) throw UnsupportedConstruct("self join", t.name);
      names_[stats->name] = stats;
      if (t.alias) {
        if (aliases_.contains(*t.alias)) throw ResolutionError("duplicate alias '" + *t.alias + "'");
        aliases_[*t.alias] = stats;
      }
      order_.push_back(stats);
    }
    if (!names_.contains(schema.fact.name)) {
      throw UnsupportedConstruct("query does not reference fact table '" + schema.fact.name + "'", tables.front().name);
    }
  }

  AttributeRef resolve(const ColumnRef& col) const {
    if (col.qualifier) {
      const TableStats* t = nullptr;
      if (auto it = aliases_.find(*col.qualifier); it != aliases_.end()) {
        t = it->second;
      } else if (auto jt = names_.find(*col.qualifier); jt != names_.end()) {
        t = jt->second;
      }
      if (t == nullptr) throw ResolutionError("unknown table or alias '" + *col.qualifier + "'");
      if (t->find(col.name) == nullptr) throw ResolutionError("unknown attribute '" + t->name + "." + col.name + "'");
      return {t->name, col.name};
    }
    const TableStats* found = nullptr;
    for (const TableStats* t : order_) {
      if (t->find(col.name) != nullptr) {
        if (found != nullptr) {
          throw ResolutionError("ambiguous attribute '" + col.name + "' (in '" + found->name + "' and '" + t->name +
                                "')");
        }
        found = t;
      }
    }
    if (found == nullptr) throw ResolutionError("unknown attribute '" + col.name + "'");
    return {found->name, col.name};
  }

  const std::vector<const TableStats*>& tables() const { return order_; }

 private:
  const StarSchema& schema_;
  std::map<std::string, const TableStats*> aliases_;
  std::map<std::string, const TableStats*> names_;
  std::vector<const TableStats*> order_;
};

}  // namespace sql

// Parses one statement (no trailing ';' required). The id is a content hash
// of the normalized token stream; load_workload prefixes batch position.
inline AnalyticalQuery parse_query(std::string_view text, const StarSchema& schema) {
  auto tokens = sql::tokenize(text);
  while (tokens.size() > 1 && tokens[tokens.size() - 2].kind == sql::TokenKind::symbol &&
         tokens[tokens.size() - 2].text == ";") {
    tokens.erase(tokens.end() - 2);
  }
  for (const auto& t : tokens) {
    if (t.kind == sql::TokenKind::symbol && t.text == ";") throw UnsupportedConstruct("multiple statements", ";");
  }
  const std::string norm = sql::normalized(tokens);
  sql::Parser parser(tokens);
  parser.parse();
  sql::Resolver resolver(schema, parser.tables_);

  AnalyticalQuery q;
  q.id = "q" + hex8(fnv1a32(norm));
  {
    std::string_view t = text;
    while (!t.empty() && (std::isspace(static_cast<unsigned char>(t.back())) || t.back() == ';')) t.remove_suffix(1);
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
    q.text = std::string(t);
  }

  const std::string& fact = schema.fact.name;
  for (const auto& p : parser.predicates_) {
    if (p.kind != sql::RawPredicate::Kind::join) continue;
    const AttributeRef a = resolver.resolve(p.left);
    const AttributeRef b = resolver.resolve(p.right);
    const AttributeRef& f = a.table == fact ? a : b;
    const AttributeRef& d = a.table == fact ? b : a;
    bool star_join = false;
    if (f.table == fact && d.table != fact) {
      if (auto it = schema.join_keys.find(f.attribute); it != schema.join_keys.end()) {
        star_join = it->second.dimension == d.table && it->second.primary_key == d.attribute;
      }
    }
    if (!star_join) throw UnsupportedConstruct("non-star join predicate", p.left.spelled + " = " + p.right.spelled);
    q.joined_dimensions.insert(d.table);
  }
  for (const TableStats* t : resolver.tables()) {
    if (t->name != fact && !q.joined_dimensions.contains(t->name)) {
      throw UnsupportedConstruct("dimension '" + t->name + "' is not joined to the fact table", t->name);
    }
  }

  for (const auto& p : parser.predicates_) {
    if (p.kind == sql::RawPredicate::Kind::join) continue;
    const AttributeRef a = resolver.resolve(p.left);
    if (a.table == fact) throw UnsupportedConstruct("restriction on fact attribute", p.left.spelled);
    RestrictionPredicate r;
    r.attribute = a;
    r.value_count = p.value_count;
    switch (p.kind) {
      case sql::RawPredicate::Kind::equality: r.kind = PredicateKind::equality; break;
      case sql::RawPredicate::Kind::in_list: r.kind = PredicateKind::in_list; break;
      default: r.kind = PredicateKind::between; break;
    }
    q.restrictions.push_back(std::move(r));
  }

  for (const auto& m : parser.measures_) {
    Measure out{m.function, std::nullopt};
    if (m.column) {
      AttributeRef a = resolver.resolve(*m.column);
      if (a.table != fact) throw UnsupportedConstruct("aggregate over dimension attribute", m.column->spelled);
      out.attribute = std::move(a);
    }
    q.measures.push_back(std::move(out));
  }

  for (const auto& g : parser.group_) {
    AttributeRef a = resolver.resolve(g);
    if (a.table == fact) throw UnsupportedConstruct("grouping on fact attribute", g.spelled);
    q.grouping.insert(std::move(a));
  }

  for (const auto& c : parser.plain_columns_) resolver.resolve(c);

  return q;
}

namespace detail {

struct Statement {
  std::string text;
  std::uint64_t weight = 1;
};

inline std::optional<std::uint64_t> weight_pragma(std::string_view comment, std::vector<std::string>& diagnostics) {
  // comment excludes the leading "--"
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::string_view body = trim(comment);
  if (body.substr(0, 7) != "weight:") return std::nullopt;
  std::string_view num = trim(body.substr(7));
  std::uint64_t w = 0;
  bool ok = !num.empty();
  for (char c : num) {
    if (c < '0' || c > '9' || w > UINT64_MAX / 10) {
      ok = false;
      break;
    }
    w = w * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (!ok || w == 0) {
    diagnostics.push_back("ignoring invalid weight pragma '--" + std::string(comment) + "'");
    return std::nullopt;
  }
  return w;
}

inline std::vector<Statement> split_statements(std::string_view text, std::vector<std::string>& diagnostics) {
  std::vector<Statement> out;
  std::string current;
  bool started = false;
  bool in_string = false;
  std::uint64_t pending = 1;
  std::uint64_t weight = 1;
  const std::size_t n = text.size();
  auto finish = [&] {
    if (started) out.push_back({current, weight});
    current.clear();
    started = false;
    weight = 1;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (in_string) {
      current += c;
      if (c == '\'') in_string = false;
      continue;
    }
    if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      const std::size_t eol = text.find('\n', i);
      const std::size_t end = eol == std::string_view::npos ? n : eol;
      if (!started) {
        if (auto w = weight_pragma(text.substr(i + 2, end - i - 2), diagnostics)) pending = *w;
      }
      current += ' ';
      i = end == n ? n - 1 : end - 1;
      continue;
    }
    if (c == ';') {
      finish();
      continue;
    }
    if (!started && !std::isspace(static_cast<unsigned char>(c))) {
      started = true;
      weight = pending;
      pending = 1;
    }
    if (c == '\'') in_string = true;
    if (started) current += c;
  }
  finish();
  return out;
}

}  // namespace detail

// Splits a workload log into statements and parses each one. Unparseable
// statements are counted in `skipped` and described in `diagnostics`.
// Query ids are "<label>#<ordinal>-<hash>" with a 1-based statement ordinal.
inline WorkloadBatch parse_workload(std::string_view text, const StarSchema& schema, std::string label) {
  WorkloadBatch batch;
  batch.source = label;
  const auto statements = detail::split_statements(text, batch.diagnostics);
  std::size_t ordinal = 0;
  for (const auto& st : statements) {
    ++ordinal;
    char pos[16];
    std::snprintf(pos, sizeof pos, "%04zu", ordinal);
    try {
      AnalyticalQuery q = parse_query(st.text, schema);
      q.id = label + "#" + pos + "-" + q.id.substr(1);
      q.weight = st.weight;
      batch.queries.push_back(std::move(q));
    } catch (const Error& e) {
      ++batch.skipped;
      batch.diagnostics.push_back("statement " + std::to_string(ordinal) + " skipped: " + e.what());
    }
  }
  return batch;
}

inline WorkloadBatch load_workload(const std::filesystem::path& path, const StarSchema& schema,
                                   std::string label = {}) {
  if (label.empty()) label = path.stem().string();
  WorkloadBatch batch = parse_workload(detail::read_file(path), schema, std::move(label));
  batch.source = path.string();
  return batch;
}

}  // namespace dynidx
