#pragma once

// Tabular experiment reports with CSV and JSON writers and readers.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gplb/errors.hpp"

namespace gplb {

inline constexpr int kSchemaVersion = 1;

enum class ColumnType { integer, unsigned_integer, real, text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::real;
};

/// Empty cells are monostate (blank in CSV, null in JSON).
using Cell = std::variant<std::monostate, std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    throw contract_error("no column named '" + name + "'");
  }
  const Cell& at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

inline std::optional<double> real_cell(const Cell& c) {
  if (const auto* v = std::get_if<double>(&c)) return *v;
  if (const auto* v = std::get_if<std::int64_t>(&c)) return static_cast<double>(*v);
  if (const auto* v = std::get_if<std::uint64_t>(&c)) return static_cast<double>(*v);
  return std::nullopt;
}

/// Log-log slope fitted over the rows of one group.
struct Fit {
  std::string group;
  std::size_t points = 0;
  std::optional<double> slope;
  std::optional<double> lower;  // 95% band
  std::optional<double> upper;
};

struct Report {
  std::string kind;        // risk | minimax | wavelet
  std::string config_ini;  // fully resolved configuration
  std::vector<Fit> fits;
  Table table;
};

inline std::vector<Column> risk_columns() {
  using T = ColumnType;
  return {{"d", T::integer},           {"n", T::real},           {"k", T::integer},
          {"m", T::integer},           {"spectrum_id", T::text}, {"K", T::integer},
          {"exact_risk", T::real},     {"mc_risk", T::real},     {"mc_stderr", T::real},
          {"lemma4_bound", T::real},   {"thm2_floor", T::real},  {"contraction_prob", T::real},
          {"radius", T::real},         {"slope", T::real},       {"seed", T::unsigned_integer}};
}

inline std::vector<Column> minimax_columns() {
  using T = ColumnType;
  return {{"d", T::integer},         {"n", T::real},
          {"k", T::integer},         {"m", T::integer},
          {"spectrum_id", T::text},  {"K", T::integer},
          {"c_sq", T::real},         {"sigma", T::real},
          {"linear_minimax", T::real}, {"a_star", T::real},
          {"brute_force", T::real},  {"scaled_linear_minimax", T::real},
          {"gp_risk_max", T::real},  {"holds", T::integer},
          {"seed", T::unsigned_integer}};
}

inline std::vector<Column> wavelet_columns() {
  using T = ColumnType;
  return {{"d", T::integer},          {"n", T::real},           {"j", T::integer},
          {"K", T::integer},          {"spectrum_id", T::text}, {"exact_risk", T::real},
          {"ilb_bound", T::real},     {"ilb_floor", T::real},   {"saturated", T::integer},
          {"rate_sq", T::real},       {"slope", T::real},       {"holds", T::integer},
          {"seed", T::unsigned_integer}};
}

inline std::vector<Column> columns_for(const std::string& kind) {
  if (kind == "risk") return risk_columns();
  if (kind == "minimax") return minimax_columns();
  if (kind == "wavelet") return wavelet_columns();
  throw schema_error("unknown report kind '" + kind + "'");
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>) return "";
        else if constexpr (std::is_same_v<V, double>) return fmt::format("{:.17g}", v);
        else if constexpr (std::is_same_v<V, std::string>) return csv_escape(v);
        else return std::to_string(v);
      },
      c);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw schema_error("unterminated quoted CSV field");
  out.push_back(std::move(field));
  return out;
}

inline Cell parse_cell(const std::string& text, ColumnType type, const std::string& column) {
  if (text.empty()) return std::monostate{};
  try {
    std::size_t used = 0;
    switch (type) {
      case ColumnType::integer: {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return static_cast<std::int64_t>(v);
        break;
      }
      case ColumnType::unsigned_integer: {
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size() && text[0] != '-') return static_cast<std::uint64_t>(v);
        break;
      }
      case ColumnType::real: {
        if (text == "nan") return std::nan("");
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
        break;
      }
      case ColumnType::text: return text;
    }
  } catch (const std::exception&) {
  }
  throw schema_error("column '" + column + "': cannot parse '" + text + "'");
}

inline nlohmann::ordered_json cell_to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<V, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else return v;
      },
      c);
}

inline Cell json_to_cell(const nlohmann::json& j, ColumnType type, const std::string& column) {
  if (j.is_null()) return std::monostate{};
  switch (type) {
    case ColumnType::integer:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      break;
    case ColumnType::unsigned_integer:
      if (j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)) return j.get<std::uint64_t>();
      break;
    case ColumnType::real:
      if (j.is_number()) return j.get<double>();
      break;
    case ColumnType::text:
      if (j.is_string()) return j.get<std::string>();
      break;
  }
  throw schema_error("column '" + column + "': unexpected JSON value " + j.dump());
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

inline std::optional<double> json_optional(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i].name;
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw contract_error("row width differs from the column count");
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + detail::format_cell(row[i]);
    out += "\n";
  }
  return out;
}

/// Parses CSV produced by to_csv against the column schema of `kind`.
inline Table parse_csv(const std::string& text, const std::string& kind) {
  Table table{columns_for(kind), {}};
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw schema_error("empty CSV: missing header");
  std::string expected;
  for (std::size_t i = 0; i < table.columns.size(); ++i) expected += (i ? "," : "") + table.columns[i].name;
  if (line != expected)
    throw schema_error(fmt::format("CSV header does not match the {} report schema version {}: got '{}', expected '{}'",
                                   kind, kSchemaVersion, line, expected));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != table.columns.size())
      throw schema_error(fmt::format("CSV row has {} fields, expected {}", fields.size(), table.columns.size()));
    std::vector<Cell> row;
    for (std::size_t i = 0; i < fields.size(); ++i)
      row.push_back(detail::parse_cell(fields[i], table.columns[i].type, table.columns[i].name));
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// INI text as a JSON object of sections (values kept as strings).
inline nlohmann::ordered_json config_json(const std::string& ini) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  if (ini.empty()) return out;
  boost::property_tree::ptree tree;
  std::istringstream in(ini);
  boost::property_tree::ini_parser::read_ini(in, tree);
  for (const auto& [section, body] : tree) {
    nlohmann::ordered_json sec = nlohmann::ordered_json::object();
    for (const auto& [key, value] : body) sec[key] = value.data();
    out[section] = sec;
  }
  return out;
}

inline std::string to_json(const Report& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = report.kind;
  j["config"] = config_json(report.config_ini);
  j["config_ini"] = report.config_ini;
  j["fits"] = nlohmann::ordered_json::array();
  for (const auto& f : report.fits) {
    j["fits"].push_back({{"group", f.group},
                         {"points", f.points},
                         {"slope", detail::optional_json(f.slope)},
                         {"lower", detail::optional_json(f.lower)},
                         {"upper", detail::optional_json(f.upper)}});
  }
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : report.table.columns) j["columns"].push_back(c.name);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.table.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[report.table.columns[i].name] = detail::cell_to_json(row[i]);
    j["rows"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

inline Report parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(std::string("malformed JSON report: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version")) throw schema_error("JSON report has no schema_version");
  const auto& version = j["schema_version"];
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion)
    throw schema_error(fmt::format("report schema version {} is not supported (expected {})", version.dump(), kSchemaVersion));
  Report r;
  try {
    r.kind = j.at("kind").get<std::string>();
    r.config_ini = j.value("config_ini", std::string{});
    for (const auto& f : j.at("fits"))
      r.fits.push_back({f.at("group").get<std::string>(), f.at("points").get<std::size_t>(), detail::json_optional(f.at("slope")),
                        detail::json_optional(f.at("lower")), detail::json_optional(f.at("upper"))});
    r.table.columns = columns_for(r.kind);
    for (const auto& row : j.at("rows")) {
      std::vector<Cell> cells;
      for (const auto& c : r.table.columns) cells.push_back(detail::json_to_cell(row.at(c.name), c.type, c.name));
      r.table.rows.push_back(std::move(cells));
    }
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(std::string("JSON report does not follow the schema: ") + e.what());
  }
  return r;
}

inline std::string render_report(const Report& report, const std::string& format) {
  if (format == "csv") return to_csv(report.table);
  if (format == "json") return to_json(report);
  throw config_error("unknown output format '" + format + "'");
}

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
  out << content;
  out.flush();
  if (!out) throw io_error("write to '" + path + "' failed: " + std::strerror(errno));
}

}  // namespace detail

/// Writes the report; CSV output also gets the resolved configuration as `<path>.ini`.
inline void emit_report(const Report& report, const std::string& path, const std::string& format) {
  detail::write_file(path, render_report(report, format));
  if (format == "csv" && !report.config_ini.empty()) detail::write_file(path + ".ini", report.config_ini);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading: " + std::strerror(errno));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace gplb
