#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <sys/wait.h>

#include "gplb/config.hpp"
#include "gplb/report.hpp"
#include "gplb/study.hpp"
#include "gplb/transfer.hpp"

using namespace gplb;

namespace {

EnvLookup env_from(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
    if (auto it = vars.find(name); it != vars.end()) return it->second;
    return std::nullopt;
  };
}

const EnvLookup no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };

std::filesystem::path scratch_dir(const std::string& tag) {
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto dir = std::filesystem::temp_directory_path() / ("gplb_test_" + tag + "_" + std::to_string(stamp));
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GPLB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Report small_rate_report() {
  ExperimentConfig c;
  c.mode = "risk";
  c.n_grid = {1e3, 1e4, 1e5};
  c.spectra = {"matched", "polynomial"};
  c.level = 6;
  c.replications = 200;
  c.seed = 5;
  return run_rate_study(c);
}

}  // namespace

TEST(ConcentrationBound, Examples) {
  EXPECT_NEAR(concentration_bound(1.0, 1e-300), 4.0, 1e-12);
  EXPECT_NEAR(concentration_bound(1.0, 32.0 * std::log(4.0)), 1.0, 1e-14);
  EXPECT_NEAR(concentration_bound(100.0, 0.32 * std::log(4.0)), 1.0, 1e-14);
  EXPECT_THROW(concentration_bound(0.0, 1.0), domain_error);
  EXPECT_THROW(concentration_bound(1.0, 0.0), domain_error);
}

TEST(ConcentrationBound, EmpiricalFrequencyBelowBound) {
  Engine rng = make_engine(9);
  const auto spectrum = polynomial_spectrum(64, 1.0, 1.0, 1, "b");
  std::normal_distribution<double> normal;
  std::vector<double> theta(64);
  for (std::size_t k = 0; k < 64; ++k) theta[k] = 0.3 * normal(rng) / static_cast<double>(k + 1);
  const TruthCoefficients truth{theta, "b", 0.0};
  for (double n : {1e3, 3e3}) {
    const double mu_sq = exact_risk(spectrum, truth, n);
    const auto errors = posterior_mean_errors(spectrum, truth, n, 10000, 17);
    const double hits = static_cast<double>(std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= mu_sq / 4; }));
    const double p = hits / static_cast<double>(errors.size());
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(errors.size()));
    EXPECT_LE(p, std::min(1.0, concentration_bound(n, mu_sq)) + 3.0 * se);
  }
}

TEST(AndersonTransfer, Examples) {
  EXPECT_EQ(anderson_transfer(0.0), 0.0);
  EXPECT_DOUBLE_EQ(anderson_transfer(0.25), 1.0);
  EXPECT_NEAR(anderson_transfer(0.01), 0.2, 1e-15);
  EXPECT_THROW(anderson_transfer(-0.1), domain_error);
  EXPECT_THROW(anderson_transfer(1.5), domain_error);
}

TEST(AndersonTransfer, EmpiricalCheckWhereContractionIsNearOnePercent) {
  // Pick gamma so that the expected posterior mass outside the gamma-ball is about 0.01, then
  // compare P(||posterior mean - f0|| >= 2 gamma) with 2 sqrt(v).
  const auto spectrum = flat_spectrum(8, 1.0, "b");
  const TruthCoefficients truth{std::vector<double>(8, 0.05), "b", 0.0};
  const double n = 100.0;
  double gamma = 0.3;
  McEstimate v{};
  for (int it = 0; it < 30; ++it) {
    v = contraction_probability(spectrum, truth, n, gamma, 100, 200, 3);
    if (std::abs(v.estimate - 0.01) < 0.004) break;
    gamma *= v.estimate > 0.01 ? 1.05 : 0.96;
  }
  ASSERT_NEAR(v.estimate, 0.01, 0.006);
  const auto errors = posterior_mean_errors(spectrum, truth, n, 10000, 4);
  const double p = static_cast<double>(std::count_if(errors.begin(), errors.end(),
                                                     [&](double e) { return e >= 4.0 * gamma * gamma; })) /
                   static_cast<double>(errors.size());
  const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(errors.size()));
  EXPECT_LE(p, anderson_transfer(v.estimate) + 3.0 * se);
}

TEST(TransferThreshold, Examples) {
  EXPECT_NEAR(transfer_threshold(0.1), 99.2, 0.05);
  EXPECT_GT(transfer_threshold(1e-9), transfer_threshold(1e-3));
  double previous = std::numeric_limits<double>::infinity();
  for (double delta = 0.005; delta < 0.25; delta += 0.005) {
    EXPECT_LT(transfer_threshold(delta), previous);
    previous = transfer_threshold(delta);
  }
  EXPECT_NEAR(transfer_threshold(0.25 - 1e-15), 32.0 * std::log(5.0), 1e-5);
  EXPECT_THROW(transfer_threshold(0.0), domain_error);
  EXPECT_THROW(transfer_threshold(0.3), domain_error);
}

TEST(Config, DefaultsFromEmptyText) {
  const auto c = parse_config("", no_env);
  EXPECT_EQ(c.mode, "rates");
  EXPECT_EQ(c.d, 1);
  EXPECT_EQ(c.n_grid, std::vector<double>{1e3});
  EXPECT_EQ(c.level, -1);
}

TEST(Config, ParsesAllSections) {
  const std::string ini = R"(
[experiment]
mode = contraction
d = 2
seed = 123

[grid]
log10_start = 3
log10_stop = 4
log10_step = 0.5

[spectrum]
presets = matched, flat
tau = 2.5

[basis]
kind = haar
level = 4
truncation = 100

[monte_carlo]
replications = 50
outer = 10
inner = 20

[output]
path = out.csv
format = json
threads = 3
)";
  const auto c = parse_config(ini, no_env);
  EXPECT_EQ(c.mode, "contraction");
  EXPECT_EQ(c.d, 2);
  EXPECT_EQ(c.seed, 123u);
  ASSERT_EQ(c.n_grid.size(), 3u);
  EXPECT_NEAR(c.n_grid[1], std::pow(10.0, 3.5), 1e-9);
  EXPECT_EQ(c.spectra, (std::vector<std::string>{"matched", "flat"}));
  EXPECT_EQ(c.tau, 2.5);
  EXPECT_EQ(c.level, 4);
  EXPECT_EQ(c.truncation, 100u);
  EXPECT_EQ(c.replications, 50u);
  EXPECT_EQ(c.outer, 10u);
  EXPECT_EQ(c.inner, 20u);
  EXPECT_EQ(c.out_path, "out.csv");
  EXPECT_EQ(c.format, "json");
  EXPECT_EQ(c.threads, 3u);
}

TEST(Config, EnvironmentOverridesFile) {
  const auto c = parse_config("[experiment]\nd = 1\nseed = 4\n",
                              env_from({{"GPLB_EXPERIMENT_D", "3"}, {"GPLB_GRID_N", "10, 100"}}));
  EXPECT_EQ(c.d, 3);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.n_grid, (std::vector<double>{10.0, 100.0}));
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse_config("[nope]\na = 1\n", no_env), config_error);
  EXPECT_THROW(parse_config("[experiment]\ncolour = red\n", no_env), config_error);
  EXPECT_THROW(parse_config("[experiment]\nmode = dance\n", no_env), config_error);
  EXPECT_THROW(parse_config("[experiment]\nd = two\n", no_env), config_error);
  EXPECT_THROW(parse_config("[grid]\nn = 100, 10\n", no_env), config_error);
  EXPECT_THROW(parse_config("[grid]\nn = 10\nlog10_start = 1\n", no_env), config_error);
  EXPECT_THROW(parse_config("[spectrum]\npresets = gaussian\n", no_env), config_error);
  EXPECT_THROW(parse_config("[monte_carlo]\nreplications = 1\n", no_env), config_error);
  EXPECT_THROW(parse_config("[output]\nformat = xml\n", no_env), config_error);
  EXPECT_THROW(parse_config("[output]\nthreads = 0\n", no_env), config_error);
  EXPECT_THROW(parse_config("[basis]\nkind = daubechies\n", no_env), config_error);
  EXPECT_THROW(load_config("/nonexistent/dir/config.ini", no_env), config_error);
}

TEST(Config, IniRoundTrip) {
  ExperimentConfig c;
  c.mode = "wavelet";
  c.d = 2;
  c.seed = 18446744073709551615ull;
  c.n_grid = {1000.0, std::pow(10.0, 3.5), 1e4};
  c.spectra = {"polynomial", "exponential"};
  c.tau = 0.1;
  c.alpha = 1.0 / 3.0;
  c.level = 3;
  c.threads = 2;
  const auto back = parse_config(to_ini(c), no_env);
  EXPECT_EQ(back.mode, c.mode);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.n_grid, c.n_grid);
  EXPECT_EQ(back.spectra, c.spectra);
  EXPECT_EQ(back.alpha, c.alpha);
  EXPECT_EQ(back.level, c.level);
  EXPECT_EQ(to_ini(back), to_ini(c));
}

TEST(Report, CsvHeaderIsTheFixedSchema) {
  const Table empty{risk_columns(), {}};
  EXPECT_EQ(to_csv(empty),
            "d,n,k,m,spectrum_id,K,exact_risk,mc_risk,mc_stderr,lemma4_bound,thm2_floor,contraction_prob,radius,slope,seed\n");
}

TEST(Report, EmptyReportIsHeaderOnlyCsvAndValidJson) {
  const Report r{"risk", "", {}, {risk_columns(), {}}};
  const auto csv = render_report(r, "csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  const auto json = nlohmann::json::parse(render_report(r, "json"));
  EXPECT_EQ(json["schema_version"], kSchemaVersion);
  EXPECT_TRUE(json["rows"].is_array());
  EXPECT_TRUE(json["rows"].empty());
  EXPECT_TRUE(parse_json(json.dump()).table.rows.empty());
}

TEST(Report, CsvRoundTripIsExact) {
  const auto report = small_rate_report();
  const auto table = parse_csv(to_csv(report.table), "risk");
  ASSERT_EQ(table.rows.size(), report.table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) EXPECT_EQ(table.rows[i], report.table.rows[i]) << i;
  EXPECT_EQ(to_csv(table), to_csv(report.table));
}

TEST(Report, JsonRoundTripIsExact) {
  const auto report = small_rate_report();
  const auto back = parse_json(to_json(report));
  EXPECT_EQ(back.kind, "risk");
  EXPECT_EQ(back.config_ini, report.config_ini);
  ASSERT_EQ(back.fits.size(), report.fits.size());
  for (std::size_t i = 0; i < back.fits.size(); ++i) EXPECT_EQ(back.fits[i].slope, report.fits[i].slope);
  EXPECT_EQ(back.table.rows, report.table.rows);
}

TEST(Report, QuotedTextSurvivesCsv) {
  Table t{risk_columns(), {}};
  std::vector<Cell> row(t.columns.size());
  row[t.column("spectrum_id")] = std::string("a,\"b\"");
  row[t.column("n")] = 0.1;
  t.rows.push_back(row);
  EXPECT_EQ(parse_csv(to_csv(t), "risk").rows[0], row);
}

TEST(Report, SchemaErrors) {
  auto j = nlohmann::json::parse(to_json({"risk", "", {}, {risk_columns(), {}}}));
  j["schema_version"] = kSchemaVersion + 1;
  try {
    parse_json(j.dump());
    FAIL() << "expected schema_error";
  } catch (const schema_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  EXPECT_THROW(parse_json("{}"), schema_error);
  EXPECT_THROW(parse_json("not json"), schema_error);
  EXPECT_THROW(parse_csv("d,n\n", "risk"), schema_error);
  EXPECT_THROW(parse_csv("", "risk"), schema_error);
  EXPECT_THROW(columns_for("other"), schema_error);
}

TEST(Report, EmitWritesSidecarAndReportsPathOnFailure) {
  const auto dir = scratch_dir("emit");
  const auto report = small_rate_report();
  const auto path = (dir / "r.csv").string();
  emit_report(report, path, "csv");
  EXPECT_EQ(read_file(path), to_csv(report.table));
  EXPECT_EQ(read_file(path + ".ini"), report.config_ini);
  const std::string bad = (dir / "missing" / "r.csv").string();
  try {
    emit_report(report, bad, "csv");
    FAIL() << "expected io_error";
  } catch (const io_error& e) {
    EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST(FitLogSlope, ExactPowerLaw) {
  const std::vector<double> x{1, 10, 100, 1000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.75));
  const auto f = fit_log_slope(x, y);
  ASSERT_TRUE(f.slope.has_value());
  EXPECT_NEAR(*f.slope, -0.75, 1e-12);
  EXPECT_NEAR(*f.lower, -0.75, 1e-9);
  EXPECT_NEAR(*f.upper, -0.75, 1e-9);
  EXPECT_FALSE(fit_log_slope({10.0}, {1.0}).slope.has_value());
  EXPECT_FALSE(fit_log_slope({1.0, 10.0}, {1.0, 2.0}).lower.has_value());
}

TEST(RunRateStudy, RowsRespectTheBounds) {
  const auto report = small_rate_report();
  ASSERT_EQ(report.table.rows.size(), 6u);
  for (std::size_t i = 0; i < report.table.rows.size(); ++i) {
    const double risk = *real_cell(report.table.at(i, "exact_risk"));
    const double n = *real_cell(report.table.at(i, "n"));
    EXPECT_LE(*real_cell(report.table.at(i, "thm2_floor")), risk + 1e-12);
    EXPECT_TRUE(real_cell(report.table.at(i, "mc_risk")).has_value());
    EXPECT_TRUE(std::isfinite(*real_cell(report.table.at(i, "slope"))));
    EXPECT_GE(n, 12.0);
  }
  EXPECT_EQ(report.fits.size(), 2u);
}

TEST(RunRateStudy, SingleGridPointHasNoSlope) {
  ExperimentConfig c;
  c.n_grid = {1e4};
  c.level = 6;
  const auto report = run_rate_study(c);
  ASSERT_EQ(report.table.rows.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(report.table.at(0, "slope")));
  EXPECT_FALSE(report.fits.at(0).slope.has_value());
}

TEST(RunRateStudy, InfeasibleLevelNamesTheMinimum) {
  ExperimentConfig c;
  c.n_grid = {1e8};  // k = 18 needs J = 4
  c.level = 2;
  try {
    run_rate_study(c);
    FAIL() << "expected config_error";
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("J=" + std::to_string(minimal_level(choose_grid(1, 1e8).k))), std::string::npos);
  }
}

TEST(RunRateStudy, ContractionModeEmitsTwoRadii) {
  ExperimentConfig c;
  c.mode = "contraction";
  c.n_grid = {1e3};
  c.level = 5;
  c.outer = 20;
  c.inner = 50;
  const auto report = run_study(c);
  ASSERT_EQ(report.table.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const double p = *real_cell(report.table.at(i, "contraction_prob"));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(RunRateStudy, SameSeedSameCsvAcrossThreadCounts) {
  ExperimentConfig c;
  c.mode = "risk";
  c.n_grid = {1e3, 1e4};
  c.level = 6;
  c.replications = 600;
  const auto a = to_csv(run_study(c).table);
  c.threads = 3;
  EXPECT_EQ(a, to_csv(run_study(c).table));
}

TEST(RunMinimaxStudy, DominanceHoldsOnEveryRow) {
  ExperimentConfig c;
  c.mode = "minimax";
  c.n_grid = {1e3, 1e4};
  c.spectra = {"matched", "flat", "polynomial"};
  c.level = 7;
  const auto report = run_study(c);
  ASSERT_EQ(report.table.rows.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(std::get<std::int64_t>(report.table.at(i, "holds")), 1);
    EXPECT_NEAR(*real_cell(report.table.at(i, "brute_force")), *real_cell(report.table.at(i, "linear_minimax")), 1e-9);
  }
}

TEST(RunWaveletStudy, RowsAndRate) {
  ExperimentConfig c;
  c.mode = "wavelet";
  c.n_grid = {1e3, 1e4, 1e5};
  c.level = 6;
  const auto report = run_study(c);
  ASSERT_EQ(report.table.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_GE(*real_cell(report.table.at(i, "exact_risk")), *real_cell(report.table.at(i, "ilb_floor")) - 1e-12);
  EXPECT_NEAR(*real_cell(report.table.at(0, "rate_sq")), std::pow(1e3, -2.0 / 3.0), 1e-15);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  const auto good = (dir / "good.ini").string();
  const auto bad = (dir / "bad.ini").string();
  const auto coarse = (dir / "coarse.ini").string();
  detail::write_file(good, "[grid]\nn = 1000\n[basis]\nlevel = 5\n");
  detail::write_file(bad, "[experiment]\nd = 0\n");
  detail::write_file(coarse, "[grid]\nn = 1e8\n[basis]\nlevel = 1\n");
  const auto out = (dir / "out.csv").string();
  EXPECT_EQ(run_cli("rates --config " + good + " --out " + out), 0);
  EXPECT_TRUE(std::filesystem::exists(out));
  EXPECT_TRUE(std::filesystem::exists(out + ".ini"));
  EXPECT_EQ(run_cli("minimax --config " + good + " --format json"), 0);
  EXPECT_EQ(run_cli("rates --config " + bad), 2);
  EXPECT_EQ(run_cli("rates --config " + coarse), 2);
  EXPECT_EQ(run_cli("rates --config " + (dir / "absent.ini").string()), 2);
  EXPECT_EQ(run_cli("rates --format xml"), 2);
  EXPECT_EQ(run_cli("dance"), 2);
  EXPECT_EQ(run_cli("rates --config " + good + " --out " + (dir / "no" / "such.csv").string()), 1);
  std::filesystem::remove_all(dir);
}
