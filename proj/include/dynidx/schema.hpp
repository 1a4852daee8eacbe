#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dynidx/error.hpp"

namespace dynidx {

using json = nlohmann::json;

// Attribute identity: (table, attribute). Bare attribute names are never
// resolved globally.
struct AttributeRef {
  std::string table;
  std::string attribute;

  auto operator<=>(const AttributeRef&) const = default;

  std::string to_string() const { return table + "." + attribute; }

  static AttributeRef parse(std::string_view text) {
    const auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size() ||
        text.find('.', dot + 1) != std::string_view::npos) {
      throw ParseError("attribute identity must be 'table.attribute', got '" + std::string(text) + "'");
    }
    return {std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
  }
};

using AttributeSet = std::set<AttributeRef>;

struct AttributeStats {
  std::string name;
  std::uint64_t distinct_values = 1;
};

struct TableStats {
  std::string name;
  std::uint64_t row_count = 0;
  std::uint64_t row_width = 1;
  std::vector<AttributeStats> attributes;
  std::string primary_key;  // empty for the fact table

  const AttributeStats* find(std::string_view attr) const {
    for (const auto& a : attributes)
      if (a.name == attr) return &a;
    return nullptr;
  }
};

struct JoinTarget {
  std::string dimension;
  std::string primary_key;
};

struct StarSchema {
  static constexpr std::uint64_t kDefaultPageSize = 8192;

  TableStats fact;
  std::vector<TableStats> dimensions;
  std::map<std::string, JoinTarget> join_keys;  // fact attribute -> dimension key
  std::uint64_t page_size = kDefaultPageSize;

  const TableStats* dimension(std::string_view name) const {
    for (const auto& d : dimensions)
      if (d.name == name) return &d;
    return nullptr;
  }

  const TableStats* table(std::string_view name) const {
    if (fact.name == name) return &fact;
    return dimension(name);
  }

  bool is_dimension_attribute(const AttributeRef& ref) const {
    const TableStats* d = dimension(ref.table);
    return d != nullptr && d->find(ref.attribute) != nullptr;
  }

  const AttributeStats& attribute(const AttributeRef& ref) const {
    const TableStats* t = table(ref.table);
    if (t == nullptr) throw ResolutionError("unknown table '" + ref.table + "'");
    const AttributeStats* a = t->find(ref.attribute);
    if (a == nullptr) throw ResolutionError("unknown attribute '" + ref.to_string() + "'");
    return *a;
  }

  // Fact attribute joining `dim`, or nullptr when the dimension is not joined.
  const std::string* foreign_key_for(std::string_view dim) const {
    for (const auto& [fk, target] : join_keys)
      if (target.dimension == dim) return &fk;
    return nullptr;
  }
};

// ceil(row_count * row_width / page_size), exact integer arithmetic.
inline std::uint64_t page_count(const TableStats& table, std::uint64_t page_size) {
  if (page_size == 0) throw ValidationError("page_size must be >= 1");
  const unsigned __int128 bytes = static_cast<unsigned __int128>(table.row_count) * table.row_width;
  return static_cast<std::uint64_t>((bytes + page_size - 1) / page_size);
}

inline void validate(const StarSchema& schema) {
  if (schema.page_size == 0) throw ValidationError("page_size must be >= 1");

  auto check_table = [](const TableStats& t, bool is_dimension) {
    if (t.name.empty()) throw ValidationError("table with empty name");
    if (t.row_width == 0) throw ValidationError("table '" + t.name + "': row_width must be >= 1");
    std::set<std::string> names;
    for (const auto& a : t.attributes) {
      if (a.name.empty()) throw ValidationError("table '" + t.name + "': attribute with empty name");
      if (!names.insert(a.name).second) {
        throw ValidationError("table '" + t.name + "': duplicate attribute '" + a.name + "'");
      }
      if (a.distinct_values == 0) {
        throw ValidationError("attribute '" + t.name + "." + a.name + "': distinct_values must be >= 1");
      }
    }
    if (is_dimension) {
      if (t.primary_key.empty()) throw ValidationError("dimension '" + t.name + "' has no primary_key");
      if (t.find(t.primary_key) == nullptr) {
        throw ValidationError("dimension '" + t.name + "': primary_key '" + t.primary_key +
                              "' is not among its attributes");
      }
    } else if (!t.primary_key.empty()) {
      throw ValidationError("fact table '" + t.name + "' must not declare a primary_key");
    }
  };

  check_table(schema.fact, false);
  std::set<std::string> table_names{schema.fact.name};
  for (const auto& d : schema.dimensions) {
    check_table(d, true);
    if (!table_names.insert(d.name).second) throw ValidationError("duplicate table name '" + d.name + "'");
  }

  std::set<std::string> joined;
  for (const auto& [fk, target] : schema.join_keys) {
    if (schema.fact.find(fk) == nullptr) {
      throw ValidationError("join key '" + fk + "' is not an attribute of fact table '" + schema.fact.name + "'");
    }
    const TableStats* d = schema.dimension(target.dimension);
    if (d == nullptr) {
      throw ValidationError("join key '" + fk + "' references unknown dimension '" + target.dimension + "'");
    }
    if (target.primary_key != d->primary_key) {
      throw ValidationError("join key '" + fk + "' must target primary key '" + d->primary_key + "' of '" +
                            d->name + "'");
    }
    if (!joined.insert(target.dimension).second) {
      throw ValidationError("dimension '" + target.dimension + "' is joined by more than one fact attribute");
    }
  }
}

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ParseError("unknown key '" + it.key() + "'", 0, where);
    }
  }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing key '") + key + "'", 0, where);
  return *it;
}

inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError("expected a string", 0, where);
  return v.get<std::string>();
}

inline std::uint64_t as_unsigned(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw ParseError("expected a non-negative integer", 0, where);
  throw ParseError("expected an integer", 0, where);
}

inline const json& as_object(const json& v, const std::string& where) {
  if (!v.is_object()) throw ParseError("expected an object", 0, where);
  return v;
}

inline const json& as_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError("expected an array", 0, where);
  return v;
}

inline std::size_t line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_of(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
  return ss.str();
}

inline TableStats read_table(const json& obj, const std::string& where, bool is_dimension) {
  as_object(obj, where);
  if (is_dimension) {
    reject_unknown_keys(obj, {"name", "row_count", "row_width", "attributes", "primary_key"}, where);
  } else {
    reject_unknown_keys(obj, {"name", "row_count", "row_width", "attributes", "join_keys"}, where);
  }
  TableStats t;
  t.name = as_string(require(obj, "name", where), where + ".name");
  t.row_count = as_unsigned(require(obj, "row_count", where), where + ".row_count");
  t.row_width = as_unsigned(require(obj, "row_width", where), where + ".row_width");
  const json& attrs = as_array(require(obj, "attributes", where), where + ".attributes");
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const std::string at = where + ".attributes[" + std::to_string(i) + "]";
    as_object(attrs[i], at);
    reject_unknown_keys(attrs[i], {"name", "distinct_values"}, at);
    AttributeStats a;
    a.name = as_string(require(attrs[i], "name", at), at + ".name");
    a.distinct_values = as_unsigned(require(attrs[i], "distinct_values", at), at + ".distinct_values");
    t.attributes.push_back(std::move(a));
  }
  if (is_dimension) t.primary_key = as_string(require(obj, "primary_key", where), where + ".primary_key");
  return t;
}

}  // namespace detail

inline StarSchema parse_schema(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text);
  as_object(doc, "schema");
  reject_unknown_keys(doc, {"page_size", "fact", "dimensions"}, "schema");

  StarSchema schema;
  if (auto it = doc.find("page_size"); it != doc.end()) schema.page_size = as_unsigned(*it, "page_size");

  const json& fact = require(doc, "fact", "schema");
  schema.fact = read_table(fact, "fact", false);

  const json& dims = as_array(require(doc, "dimensions", "schema"), "dimensions");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    schema.dimensions.push_back(read_table(dims[i], "dimensions[" + std::to_string(i) + "]", true));
  }

  if (auto it = fact.find("join_keys"); it != fact.end()) {
    as_array(*it, "fact.join_keys");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string at = "fact.join_keys[" + std::to_string(i) + "]";
      const json& jk = (*it)[i];
      as_object(jk, at);
      reject_unknown_keys(jk, {"fact_attribute", "dimension"}, at);
      const std::string fk = as_string(require(jk, "fact_attribute", at), at + ".fact_attribute");
      const std::string dim = as_string(require(jk, "dimension", at), at + ".dimension");
      const TableStats* d = schema.dimension(dim);
      if (d == nullptr) throw ValidationError("join key '" + fk + "' references unknown dimension '" + dim + "'");
      if (!schema.join_keys.emplace(fk, JoinTarget{dim, d->primary_key}).second) {
        throw ValidationError("duplicate join key '" + fk + "'");
      }
    }
  }

  validate(schema);
  return schema;
}

inline StarSchema load_schema(const std::filesystem::path& path) {
  return parse_schema(detail::read_file(path));
}

inline json to_json(const StarSchema& schema) {
  auto table = [](const TableStats& t) {
    json attrs = json::array();
    for (const auto& a : t.attributes) attrs.push_back({{"name", a.name}, {"distinct_values", a.distinct_values}});
    json out = {{"name", t.name}, {"row_count", t.row_count}, {"row_width", t.row_width}, {"attributes", attrs}};
    return out;
  };
  json fact = table(schema.fact);
  json jks = json::array();
  for (const auto& [fk, target] : schema.join_keys) jks.push_back({{"fact_attribute", fk}, {"dimension", target.dimension}});
  fact["join_keys"] = jks;
  json dims = json::array();
  for (const auto& d : schema.dimensions) {
    json t = table(d);
    t["primary_key"] = d.primary_key;
    dims.push_back(t);
  }
  return {{"page_size", schema.page_size}, {"fact", fact}, {"dimensions", dims}};
}

inline std::string serialize_schema(const StarSchema& schema) { return to_json(schema).dump(2) + "\n"; }

inline bool operator==(const AttributeStats& a, const AttributeStats& b) {
  return a.name == b.name && a.distinct_values == b.distinct_values;
}
inline bool operator==(const TableStats& a, const TableStats& b) {
  return a.name == b.name && a.row_count == b.row_count && a.row_width == b.row_width &&
         a.attributes == b.attributes && a.primary_key == b.primary_key;
}
inline bool operator==(const JoinTarget& a, const JoinTarget& b) {
  return a.dimension == b.dimension && a.primary_key == b.primary_key;
}
inline bool operator==(const StarSchema& a, const StarSchema& b) {
  return a.fact == b.fact && a.dimensions == b.dimensions && a.join_keys == b.join_keys &&
         a.page_size == b.page_size;
}

}  // namespace dynidx
