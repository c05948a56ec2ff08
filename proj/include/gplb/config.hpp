#pragma once

// Experiment configuration: an INI file with typed sections, overridable from the environment
// as GPLB_<SECTION>_<KEY> (upper case), e.g. GPLB_GRID_LOG10_STOP=5.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gplb/errors.hpp"

namespace gplb {

struct ExperimentConfig {
  std::string mode = "rates";  // risk | contraction | minimax | wavelet | rates | verify
  int d = 1;
  std::uint64_t seed = 1;
  std::vector<double> n_grid{1e3};
  std::vector<std::string> spectra{"matched"};  // matched | polynomial | exponential | flat
  double tau = 1.0;
  double alpha = 1.0;
  double rate = 0.01;
  std::string basis = "haar";
  int level = -1;              // -1: chosen automatically
  std::size_t truncation = 0;  // 0: the whole basis
  std::size_t replications = 0;
  std::size_t outer = 200;
  std::size_t inner = 500;
  std::string out_path;
  std::string format = "csv";
  unsigned threads = 1;
};

inline const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> modes{"risk", "contraction", "minimax", "wavelet", "rates", "verify"};
  return modes;
}

inline const std::vector<std::string>& known_spectra() {
  static const std::vector<std::string> presets{"matched", "polynomial", "exponential", "flat"};
  return presets;
}

namespace detail {

inline std::string trim(std::string s) {
  auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw config_error(fmt::format("{}: '{}' is not a finite number", key, text));
}

inline std::int64_t parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw config_error(fmt::format("{}: '{}' is not an integer", key, text));
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  try {
    std::size_t used = 0;
    if (!t.empty() && t[0] != '-') {
      const unsigned long long v = std::stoull(t, &used);
      if (used == t.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw config_error(fmt::format("{}: '{}' is not an unsigned 64-bit integer", key, text));
}

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Keys recognised in each section.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& config_schema() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> schema{
      {"experiment", {"mode", "d", "seed"}},
      {"grid", {"n", "log10_start", "log10_stop", "log10_step"}},
      {"spectrum", {"presets", "tau", "alpha", "rate"}},
      {"basis", {"kind", "level", "truncation"}},
      {"monte_carlo", {"replications", "outer", "inner"}},
      {"output", {"path", "format", "threads"}},
  };
  return schema;
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

inline void validate(const ExperimentConfig& c) {
  if (std::find(known_modes().begin(), known_modes().end(), c.mode) == known_modes().end())
    throw config_error("experiment.mode: unknown mode '" + c.mode + "'");
  if (c.d < 1 || c.d > 8) throw config_error("experiment.d must lie in [1, 8]");
  if (c.n_grid.empty()) throw config_error("grid: n grid is empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (!(c.n_grid[i] >= 1.0)) throw config_error("grid: every n must be >= 1");
    if (i > 0 && !(c.n_grid[i] > c.n_grid[i - 1])) throw config_error("grid: n grid must be strictly increasing");
  }
  if (c.spectra.empty()) throw config_error("spectrum.presets is empty");
  for (const auto& s : c.spectra)
    if (std::find(known_spectra().begin(), known_spectra().end(), s) == known_spectra().end())
      throw config_error("spectrum.presets: unknown preset '" + s + "'");
  if (!(c.tau > 0.0)) throw config_error("spectrum.tau must be > 0");
  if (!(c.alpha > 0.0)) throw config_error("spectrum.alpha must be > 0");
  if (!(c.rate >= 0.0)) throw config_error("spectrum.rate must be >= 0");
  if (c.basis != "haar" && c.basis != "cosine") throw config_error("basis.kind must be haar or cosine");
  if (c.level < -1) throw config_error("basis.level must be >= 0 or auto");
  if (c.replications == 1) throw config_error("monte_carlo.replications must be 0 (off) or >= 2");
  if (c.outer < 1 || c.inner < 1) throw config_error("monte_carlo.outer and inner must be >= 1");
  if (c.format != "csv" && c.format != "json") throw config_error("output.format must be csv or json");
  if (c.threads < 1) throw config_error("output.threads must be >= 1");
}

/// Parses INI text, then applies environment overrides and validates.
inline ExperimentConfig parse_config(const std::string& ini_text, const EnvLookup& env = process_env) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(ini_text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error(std::string("malformed config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto known = std::find_if(config_schema().begin(), config_schema().end(),
                                    [&](const auto& s) { return s.first == section; });
    if (known == config_schema().end()) throw config_error("unknown config section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw config_error("key '" + section + "' outside any section");
    for (const auto& [key, value] : body)
      if (std::find(known->second.begin(), known->second.end(), key) == known->second.end())
        throw config_error("unknown key '" + key + "' in section [" + section + "]");
  }
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    if (env) {
      if (auto v = env("GPLB_" + detail::upper(section) + "_" + detail::upper(key))) return detail::trim(*v);
    }
    if (auto v = tree.get_optional<std::string>(section + "." + key)) return detail::trim(*v);
    return std::nullopt;
  };

  ExperimentConfig c;
  if (auto v = get("experiment", "mode")) c.mode = *v;
  if (auto v = get("experiment", "d")) c.d = static_cast<int>(detail::parse_int("experiment.d", *v));
  if (auto v = get("experiment", "seed")) c.seed = detail::parse_u64("experiment.seed", *v);

  const auto explicit_n = get("grid", "n");
  const auto start = get("grid", "log10_start");
  const auto stop = get("grid", "log10_stop");
  const auto step = get("grid", "log10_step");
  if (explicit_n && (start || stop || step)) throw config_error("grid: give either n or log10_start/stop/step, not both");
  if (explicit_n) {
    c.n_grid.clear();
    for (const auto& item : detail::split_list(*explicit_n)) c.n_grid.push_back(detail::parse_double("grid.n", item));
  } else if (start || stop || step) {
    if (!start || !stop) throw config_error("grid: log10_start and log10_stop are both required");
    const double a = detail::parse_double("grid.log10_start", *start);
    const double b = detail::parse_double("grid.log10_stop", *stop);
    const double h = step ? detail::parse_double("grid.log10_step", *step) : 0.5;
    if (!(h > 0.0)) throw config_error("grid.log10_step must be > 0");
    if (b < a) throw config_error("grid.log10_stop must be >= log10_start");
    c.n_grid.clear();
    for (std::size_t i = 0;; ++i) {
      const double e = a + h * static_cast<double>(i);
      if (e > b + 1e-9 * std::max(1.0, std::abs(b))) break;
      c.n_grid.push_back(std::pow(10.0, e));
      if (c.n_grid.size() > 10000) throw config_error("grid: more than 10000 points");
    }
  }

  if (auto v = get("spectrum", "presets")) c.spectra = detail::split_list(*v);
  if (auto v = get("spectrum", "tau")) c.tau = detail::parse_double("spectrum.tau", *v);
  if (auto v = get("spectrum", "alpha")) c.alpha = detail::parse_double("spectrum.alpha", *v);
  if (auto v = get("spectrum", "rate")) c.rate = detail::parse_double("spectrum.rate", *v);

  if (auto v = get("basis", "kind")) c.basis = *v;
  if (auto v = get("basis", "level")) {
    c.level = (*v == "auto") ? -1 : static_cast<int>(detail::parse_int("basis.level", *v));
    if (*v != "auto" && c.level < 0) throw config_error("basis.level must be >= 0 or auto");
  }
  if (auto v = get("basis", "truncation"))
    c.truncation = static_cast<std::size_t>(detail::parse_u64("basis.truncation", *v));

  if (auto v = get("monte_carlo", "replications"))
    c.replications = static_cast<std::size_t>(detail::parse_u64("monte_carlo.replications", *v));
  if (auto v = get("monte_carlo", "outer")) c.outer = static_cast<std::size_t>(detail::parse_u64("monte_carlo.outer", *v));
  if (auto v = get("monte_carlo", "inner")) c.inner = static_cast<std::size_t>(detail::parse_u64("monte_carlo.inner", *v));

  if (auto v = get("output", "path")) c.out_path = *v;
  if (auto v = get("output", "format")) c.format = *v;
  if (auto v = get("output", "threads")) {
    const auto t = detail::parse_int("output.threads", *v);
    if (t < 1 || t > 1024) throw config_error("output.threads must lie in [1, 1024]");
    c.threads = static_cast<unsigned>(t);
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path, const EnvLookup& env = process_env) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), env);
}

/// The fully resolved configuration as INI text; parsing it back gives the same config.
inline std::string to_ini(const ExperimentConfig& c) {
  std::string out;
  out += fmt::format("[experiment]\nmode = {}\nd = {}\nseed = {}\n\n", c.mode, c.d, c.seed);
  out += "[grid]\nn = ";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) out += fmt::format("{}{:.17g}", i ? ", " : "", c.n_grid[i]);
  out += "\n\n[spectrum]\npresets = ";
  for (std::size_t i = 0; i < c.spectra.size(); ++i) out += (i ? ", " : "") + c.spectra[i];
  out += fmt::format("\ntau = {:.17g}\nalpha = {:.17g}\nrate = {:.17g}\n\n", c.tau, c.alpha, c.rate);
  out += fmt::format("[basis]\nkind = {}\nlevel = {}\ntruncation = {}\n\n", c.basis,
                     c.level < 0 ? std::string("auto") : std::to_string(c.level), c.truncation);
  out += fmt::format("[monte_carlo]\nreplications = {}\nouter = {}\ninner = {}\n\n", c.replications, c.outer, c.inner);
  out += fmt::format("[output]\npath = {}\nformat = {}\nthreads = {}\n", c.out_path, c.format, c.threads);
  return out;
}

}  // namespace gplb
