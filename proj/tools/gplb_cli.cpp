// Command-line harness: runs one experiment mode from an INI config and writes a report.
//
//   gplb_cli rates --config configs/rates_d1.ini --out rates.csv
//   gplb_cli verify
//
// Exit codes: 0 success, 1 property-suite failure or runtime error, 2 configuration error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <optional>
#include <string>

#include "gplb/config.hpp"
#include "gplb/errors.hpp"
#include "gplb/report.hpp"
#include "gplb/study.hpp"
#include "gplb/verification.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "INI experiment configuration")->envname("GPLB_CONFIG");
  cmd->add_option("--seed", o.seed, "master seed (u64)")->envname("GPLB_SEED");
  cmd->add_option("--out", o.out, "output path (stdout when omitted)")->envname("GPLB_OUT");
  cmd->add_option("--format", o.format, "csv or json")->envname("GPLB_FORMAT")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", o.threads, "worker threads for Monte Carlo")->envname("GPLB_THREADS")->check(CLI::Range(1u, 1024u));
}

gplb::ExperimentConfig resolve(const Overrides& o, const std::string& mode) {
  gplb::ExperimentConfig c = o.config_path.empty() ? gplb::parse_config("") : gplb::load_config(o.config_path);
  c.mode = mode;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_path = *o.out;
  if (o.format) c.format = *o.format;
  if (o.threads) c.threads = *o.threads;
  gplb::validate(c);
  return c;
}

int run_mode(const Overrides& o, const std::string& mode) {
  const auto config = resolve(o, mode);
  const auto report = gplb::run_study(config);
  if (config.out_path.empty()) {
    std::cout << gplb::render_report(report, config.format);
  } else {
    gplb::emit_report(report, config.out_path, config.format);
    std::cerr << fmt::format("wrote {} rows to {}\n", report.table.rows.size(), config.out_path);
  }
  for (const auto& f : report.fits) {
    if (f.slope)
      std::cerr << fmt::format("slope[{}] = {:.4f} over {} points\n", f.group, *f.slope, f.points);
  }
  return 0;
}

int run_verify(const Overrides& o) {
  const auto config = resolve(o, "verify");
  bool all = true;
  for (const auto& check : gplb::acceptance_checks(config.seed, config.threads)) {
    const auto r = check();
    all = all && r.passed;
    std::cout << gplb::format_result(r) << std::endl;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower-bound laboratory for Gaussian-process posterior means"};
  app.require_subcommand(1);
  Overrides o;
  std::string chosen;
  for (const char* mode : {"risk", "contraction", "minimax", "wavelet", "rates", "verify"}) {
    auto* cmd = app.add_subcommand(mode, fmt::format("run the {} experiment", mode));
    add_common(cmd, o);
    cmd->callback([&chosen, mode] { chosen = mode; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (chosen == "verify") return run_verify(o);
    return run_mode(o, chosen);
  } catch (const gplb::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const gplb::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
