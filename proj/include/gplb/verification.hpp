#pragma once

// The acceptance suite: ten checks, each returning a pass/fail line with diagnostics.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gplb/adversarial.hpp"
#include "gplb/basis.hpp"
#include "gplb/config.hpp"
#include "gplb/oracles.hpp"
#include "gplb/random.hpp"
#include "gplb/report.hpp"
#include "gplb/sequence_core.hpp"
#include "gplb/sparse_linear.hpp"
#include "gplb/study.hpp"
#include "gplb/transfer.hpp"
#include "gplb/wavelet.hpp"

namespace gplb {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline constexpr Seed kVerificationSeed = 20240917;

namespace detail {

template <class Fn>
CheckResult timed(int id, std::string name, Fn&& fn, double max_seconds = std::numeric_limits<double>::infinity()) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r{id, std::move(name), false, {}, 0.0};
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds > max_seconds) {
    r.passed = false;
    r.detail += fmt::format("; runtime {:.1f} s exceeds {:.0f} s", r.seconds, max_seconds);
  }
  return r;
}

/// Random truth of random scale over K coordinates.
template <class Rng>
TruthCoefficients random_truth(std::size_t K, const std::string& id, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double scale = std::pow(10.0, -3.0 + 3.0 * unit(rng));
  TruthCoefficients t{std::vector<double>(K), id, 0.0};
  for (auto& v : t.theta) v = scale * normal(rng);
  return t;
}

}  // namespace detail

/// 1. Closed-form pyramid norms against nested adaptive Gauss-Kronrod.
inline CheckResult check_pyramid_norms() {
  return detail::timed(1, "pyramid norms vs adaptive quadrature", [](CheckResult& r) {
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d) {
      for (std::int64_t k : {1, 2, 4}) {
        const auto fam = build_pyramid_family(d, k);
        std::vector<double> breaks;
        for (std::int64_t i = 1; i < 2 * k; ++i) breaks.push_back(static_cast<double>(i) / static_cast<double>(2 * k));
        const double q = adaptive_cube_integral(
            [&](std::span<const double> x) {
              const double v = evaluate_pyramid(fam, 0, x);
              return v * v;
            },
            d, breaks, 1e-11, pyramid_kinks(fam, 0), 4);
        const double exact = pyramid_norm_sq(d, k);
        worst = std::max(worst, std::abs(q - exact) / exact);
      }
    }
    r.passed = worst < 1e-6;
    r.detail = fmt::format("max relative error {:.3e} (tol 1e-6)", worst);
  }, 10.0);
}

/// 2. Pairwise orthogonality and membership in the Lipschitz class.
inline CheckResult check_orthogonality() {
  return detail::timed(2, "orthogonality and class membership", [](CheckResult& r) {
    double worst_off = 0.0, worst_lip = 0.0, worst_sup = 0.0;
    bool ok = true;
    for (int d = 1; d <= 3; ++d) {
      for (std::int64_t k : {1, 2, 4}) {
        const auto fam = build_pyramid_family(d, k);
        const auto G = pyramid_gram(fam);
        for (Eigen::Index i = 0; i < G.rows(); ++i)
          for (Eigen::Index j = 0; j < G.cols(); ++j)
            if (i != j) worst_off = std::max(worst_off, std::abs(G(i, j)));
        const auto mem = check_membership(fam, d == 3 ? 2 : 4);
        ok = ok && mem.ok;
        worst_lip = std::max(worst_lip, mem.max_lipschitz);
        worst_sup = std::max(worst_sup, mem.sup_norm);
      }
    }
    r.passed = ok && worst_off < 1e-12;
    r.detail = fmt::format("max |<f_i,f_j>| {:.3e}, max slope {:.12f}, max sup {:.6f}", worst_off, worst_lip, worst_sup);
  });
}

/// 3. Scalar brute force against the closed form, and diagonal domination of random A.
inline CheckResult check_linear_minimax(Seed seed = kVerificationSeed) {
  return detail::timed(3, "linear minimax and diagonal domination", [seed](CheckResult& r) {
    double worst = 0.0;
    for (std::size_t m : {1, 2, 3, 5, 8, 13, 21, 34, 55, 89}) {
      for (double sigma : {0.05, 0.2}) {
        const auto bf = brute_force_minimax(m, sigma, 100000);
        worst = std::max(worst, std::abs(bf.risk - linear_minimax_risk(m, sigma).risk));
      }
    }
    Engine rng = make_engine(derive_seed(seed, 3));
    std::normal_distribution<double> normal;
    std::size_t violations = 0;
    const double sigmas[3] = {0.1, 1.0, 3.0};
    for (std::size_t t = 0; t < 500; ++t) {
      const auto m = static_cast<Eigen::Index>(2 + t % 7);
      LinearEstimator est{Eigen::MatrixXd(m, m)};
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) est.A(i, j) = normal(rng);
      if (!diagonal_reduction(est, sigmas[t % 3]).dominated) ++violations;
    }
    r.passed = worst < 1e-8 && violations == 0;
    r.detail = fmt::format("max |brute - closed| {:.3e} over 20 pairs; {} domination violations / 500", worst, violations);
  });
}

/// 4. max_j exact risk against the universal bound for random spectra on the Haar basis.
inline CheckResult check_universal_bound(Seed seed = kVerificationSeed) {
  return detail::timed(4, "universal lower bound over random spectra", [seed](CheckResult& r) {
    struct Setting {
      int d;
      int level;
      double n;
    };
    const std::vector<Setting> settings{{1, 11, 1e3}, {1, 11, 1e4}, {1, 11, 1e5},
                                        {2, 5, 1e4},  {2, 5, 1e5},  {2, 5, 1e6}};
    std::vector<CoefficientMatrix> coeffs;
    for (const auto& s : settings) {
      const auto grid = choose_grid(s.d, s.n);
      coeffs.push_back(compute_coefficients(build_pyramid_family(s.d, grid.k), HaarTensorBasis(s.d, s.level),
                                            std::size_t{1} << (s.d * (s.level + 1))));
    }
    Engine rng = make_engine(derive_seed(seed, 4));
    std::size_t violations = 0, floor_violations = 0;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < 1000; ++t) {
      const std::size_t which = (t < 500 ? 0 : 3) + t % 3;
      const auto& C = coeffs[which];
      const double n = settings[which].n;
      const auto spectrum = random_spectrum(C.truncation(), C.basis_id, rng);
      const double risk = max_member_risk(spectrum, C, n).risk;
      const double bound = risk_lower_bound(C, n);
      if (risk < bound - 1e-12) ++violations;
      if (risk < bayes_floor(C, n) - 1e-12) ++floor_violations;
      worst_ratio = std::min(worst_ratio, risk / bound);
    }
    r.passed = violations == 0;
    r.detail = fmt::format("{} violations / 1000 (min risk/bound {:.4f}); corrected floor sum T/(1+nT): {} violations",
                           violations, worst_ratio, floor_violations);
  });
}

/// 5. Slope of the worst-member risk under the matched spectrum, d = 1.
inline CheckResult check_rate_recovery(Seed seed = kVerificationSeed) {
  return detail::timed(5, "rate recovery (d=1, matched spectrum)", [seed](CheckResult& r) {
    ExperimentConfig c;
    c.mode = "rates";
    c.d = 1;
    c.seed = seed;
    c.level = 11;
    c.n_grid.clear();
    for (int i = 0; i <= 6; ++i) c.n_grid.push_back(std::pow(10.0, 3.0 + 0.5 * i));
    const auto report = run_rate_study(c);
    bool above = true;
    for (std::size_t i = 0; i < report.table.rows.size(); ++i)
      above = above && *real_cell(report.table.at(i, "exact_risk")) >= *real_cell(report.table.at(i, "thm2_floor"));
    const auto& fit = report.fits.at(0);
    const double slope = fit.slope.value_or(std::nan(""));
    r.passed = std::abs(slope + 0.75) <= 0.03 && above;
    r.detail = fmt::format("slope {:.4f} (95% band [{:.4f}, {:.4f}], target -0.75 +- 0.03); all rows above floor: {}",
                           slope, fit.lower.value_or(std::nan("")), fit.upper.value_or(std::nan("")), above);
  }, 120.0);
}

/// 6. Monte Carlo risk against the exact risk.
inline CheckResult check_exact_vs_mc(Seed seed = kVerificationSeed, unsigned threads = 1) {
  return detail::timed(6, "exact risk vs Monte Carlo", [seed, threads](CheckResult& r) {
    Engine rng = make_engine(derive_seed(seed, 6));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t failures = 0;
    double worst_z = 0.0;
    for (std::size_t t = 0; t < 100; ++t) {
      const auto K = 1 + static_cast<std::size_t>(unit(rng) * 256.0);
      const double n = std::pow(10.0, 1.0 + 4.0 * unit(rng));
      const auto spectrum = random_spectrum(K, "random", rng);
      const auto truth = detail::random_truth(K, "random", rng);
      const double exact = exact_risk(spectrum, truth, n);
      const auto mc = mc_risk(spectrum, truth, n, 10000, derive_seed(seed, 600 + t), threads);
      const double z = std::abs(mc.estimate - exact) / mc.std_error;
      worst_z = std::max(worst_z, z);
      if (z > 4.0) ++failures;
    }
    r.passed = failures == 0;
    r.detail = fmt::format("{} / 100 outside 4 stderr (max |z| {:.2f})", failures, worst_z);
  }, 300.0);
}

/// 7. Frequency of small errors against 4 exp(-n mu^2 / 32).
inline CheckResult check_concentration(Seed seed = kVerificationSeed) {
  return detail::timed(7, "concentration of the posterior-mean error", [seed](CheckResult& r) {
    Engine rng = make_engine(derive_seed(seed, 7));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t accepted = 0, failures = 0, attempts = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
    while (accepted < 20) {
      if (++attempts > 200000) throw numerical_error("could not generate 20 configurations with n mu^2 in [10, 200]");
      const auto K = 1 + static_cast<std::size_t>(unit(rng) * 256.0);
      const double n = std::pow(10.0, 1.0 + 4.0 * unit(rng));
      const auto spectrum = random_spectrum(K, "random", rng);
      const auto truth = detail::random_truth(K, "random", rng);
      const double mu_sq = exact_risk(spectrum, truth, n);
      if (!(n * mu_sq >= 10.0 && n * mu_sq <= 200.0)) continue;
      const auto errors = posterior_mean_errors(spectrum, truth, n, 10000, derive_seed(seed, 700 + accepted));
      const double hits = static_cast<double>(std::count_if(errors.begin(), errors.end(),
                                                            [&](double e) { return e <= mu_sq / 4.0; }));
      const double p = hits / static_cast<double>(errors.size());
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(errors.size()));
      const double margin = p - (concentration_bound(n, mu_sq) + 3.0 * se);
      worst_margin = std::max(worst_margin, margin);
      if (margin > 0.0) ++failures;
      ++accepted;
    }
    r.passed = failures == 0;
    r.detail = fmt::format("{} / 20 above bound + 3 se (largest frequency - allowance {:.4f})", failures, worst_margin);
  });
}

/// 8. Posterior mass outside the gamma/5 ball for configurations with n gamma^2 above the threshold.
inline CheckResult check_contraction_floor(Seed seed = kVerificationSeed, unsigned threads = 1) {
  return detail::timed(8, "contraction floor at radius gamma/5", [seed, threads](CheckResult& r) {
    const double threshold = transfer_threshold(0.1);
    struct Case {
      int d;
      double n;
      int level;
      std::string preset;
      bool floor_gamma;  // gamma^2 = the rate floor, else the worst member's risk
    };
    const std::vector<Case> cases{{1, 1e14, 11, "matched", true},    {1, 1e14, 11, "matched", false},
                                  {1, 1e3, 8, "matched", false},     {1, 1e4, 8, "polynomial", false},
                                  {1, 1e5, 8, "flat", false},        {1, 1e5, 8, "matched", false},
                                  {2, 1e4, 4, "matched", false},     {2, 1e5, 4, "polynomial", false},
                                  {2, 1e6, 4, "matched", false}};
    std::size_t used = 0, failures = 0;
    double lowest = 1.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& cs = cases[i];
      ExperimentConfig c;
      c.d = cs.d;
      c.level = cs.level;
      c.tau = 1.0;
      c.alpha = 1.0;
      const auto at = family_at(c, cs.n);
      const auto T = mean_square_coefficients(at.coeffs);
      const auto spectrum = preset_spectrum(c, cs.preset, at.coeffs.truncation(), at.coeffs.basis_id, T).first;
      const auto worst = max_member_risk(spectrum, at.coeffs, cs.n);
      const double gamma_sq = cs.floor_gamma ? theorem2_floor(cs.d, cs.n) : worst.risk;
      if (cs.n * gamma_sq < threshold) continue;
      ++used;
      const auto p = contraction_probability(spectrum, member_truth(at.coeffs, worst.index), cs.n,
                                             std::sqrt(gamma_sq) / 5.0, kDefaultOuter, kDefaultInner,
                                             derive_seed(seed, 800 + i), threads);
      lowest = std::min(lowest, p.estimate);
      if (p.estimate < 0.15 - 3.0 * p.std_error) ++failures;
    }
    r.passed = used > 0 && failures == 0;
    r.detail = fmt::format("{} configs with n gamma^2 >= {:.2f}; {} below 0.15 - 3 se (lowest estimate {:.4f})", used,
                           threshold, failures, lowest);
  });
}

/// 9. ILB against the exact risk for random spectra and five test functions, plus the exponent order.
inline CheckResult check_wavelet_ilb(Seed seed = kVerificationSeed) {
  return detail::timed(9, "wavelet ILB and exponent order", [seed](CheckResult& r) {
    const HaarTensorBasis basis(1, 6);
    const double n = 1e3;
    std::vector<std::vector<double>> tests;
    const std::pair<std::int64_t, std::size_t> pyramids[3] = {{1, 0}, {2, 0}, {3, 1}};
    for (const auto& [k, j] : pyramids) {
      const auto C = compute_coefficients(build_pyramid_family(1, k), basis, basis.size());
      const auto row = C.entries.row(static_cast<Eigen::Index>(j));
      tests.emplace_back(row.begin(), row.end());
    }
    tests.push_back(haar_coefficients(basis, SawtoothSurrogate{1, 2}));
    tests.push_back(haar_coefficients(basis, SawtoothSurrogate{1, 3}));
    Engine rng = make_engine(derive_seed(seed, 9));
    std::size_t violations = 0, floor_violations = 0;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (const auto& theta : tests) {
      const TruthCoefficients truth{theta, basis.id(), 0.0};
      const double bound = ilb_risk_bound(theta, n);
      const double floor = ilb_bayes_floor(theta, n);
      for (int s = 0; s < 50; ++s) {
        const auto spectrum = random_spectrum(basis.size(), basis.id(), rng);
        const double risk = exact_risk(spectrum, truth, n);
        if (risk < bound - 1e-12) ++violations;
        if (risk < floor - 1e-12) ++floor_violations;
        worst_ratio = std::min(worst_ratio, risk / bound);
      }
    }
    bool exponents = true;
    for (int d = 1; d <= 10; ++d)
      exponents = exponents && wavelet_rate_exponent(d) < theorem_constants(d).rate_exponent;
    r.passed = violations == 0 && exponents;
    r.detail = fmt::format("{} violations / 250 (min risk/bound {:.4f}); corrected floor: {} violations; "
                           "exponent order d=1..10: {}",
                           violations, worst_ratio, floor_violations, exponents ? "holds" : "fails");
  });
}

/// 10. Two runs of the same configuration give byte-identical CSV files.
inline CheckResult check_reproducibility(Seed seed = kVerificationSeed) {
  return detail::timed(10, "byte-identical reruns", [seed](CheckResult& r) {
    ExperimentConfig c;
    c.mode = "contraction";
    c.d = 1;
    c.seed = seed;
    c.n_grid = {1e3, 1e4};
    c.spectra = {"matched", "polynomial"};
    c.level = 7;
    c.replications = 2000;
    c.outer = 40;
    c.inner = 100;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const auto dir = std::filesystem::temp_directory_path() / fmt::format("gplb_repro_{}", stamp);
    std::filesystem::create_directories(dir);
    const auto first = (dir / "first.csv").string();
    const auto second = (dir / "second.csv").string();
    const auto threaded = (dir / "threaded.csv").string();
    emit_report(run_study(c), first, "csv");
    emit_report(run_study(c), second, "csv");
    c.threads = 2;
    emit_report(run_study(c), threaded, "csv");
    const bool same = read_file(first) == read_file(second);
    const bool thread_free = read_file(first) == read_file(threaded);
    std::filesystem::remove_all(dir);
    r.passed = same;
    r.detail = fmt::format("consecutive runs {}; run with 2 threads {}", same ? "identical" : "differ",
                           thread_free ? "identical" : "differs");
  });
}

using Check = std::function<CheckResult()>;

inline std::vector<Check> acceptance_checks(Seed seed = kVerificationSeed, unsigned threads = 1) {
  return {[] { return check_pyramid_norms(); },
          [] { return check_orthogonality(); },
          [seed] { return check_linear_minimax(seed); },
          [seed] { return check_universal_bound(seed); },
          [seed] { return check_rate_recovery(seed); },
          [seed, threads] { return check_exact_vs_mc(seed, threads); },
          [seed] { return check_concentration(seed); },
          [seed, threads] { return check_contraction_floor(seed, threads); },
          [seed] { return check_wavelet_ilb(seed); },
          [seed] { return check_reproducibility(seed); }};
}

inline std::string format_result(const CheckResult& r) {
  return fmt::format("[{}] criterion {:>2}: {} ({:.1f} s) - {}", r.passed ? "PASS" : "FAIL", r.id, r.name, r.seconds,
                     r.detail);
}

}  // namespace gplb
