#pragma once

// Experiment drivers behind the CLI modes: rate studies over an n grid, contraction
// probabilities, the one-sparse linear-minimax comparison and the wavelet ILB study.

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gplb/adversarial.hpp"
#include "gplb/basis.hpp"
#include "gplb/config.hpp"
#include "gplb/random.hpp"
#include "gplb/report.hpp"
#include "gplb/sequence_core.hpp"
#include "gplb/sparse_linear.hpp"
#include "gplb/wavelet.hpp"

namespace gplb {

struct SlopeFit {
  std::size_t points = 0;
  std::optional<double> slope;
  std::optional<double> lower;
  std::optional<double> upper;
};

/// OLS of log y on log x with a 95% band from the residual variance (needs >= 3 points).
inline SlopeFit fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw contract_error("fit_log_slope: x and y differ in length");
  SlopeFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  const auto N = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return fit;
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= N;
  my /= N;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) return fit;
  const double b = sxy / sxx;
  fit.slope = b;
  if (x.size() >= 3) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = std::log(y[i]) - my - b * (std::log(x[i]) - mx);
      ssr += r * r;
    }
    const double se = std::sqrt(ssr / (N - 2.0) / sxx);
    const boost::math::students_t dist(N - 2.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.lower = b - t * se;
    fit.upper = b + t * se;
  }
  return fit;
}

/// Default level: the largest J with K = 2^{d(J+1)} within a desk-scale budget.
inline int default_level(int d, const std::string& basis_kind) {
  const int budget = basis_kind == "cosine" ? 8 : 12;
  return std::max(0, budget / d - 1);
}

/// Level for a family with k centres per axis; rejects levels too coarse for the pyramids.
inline int resolve_level(const ExperimentConfig& c, std::int64_t k) {
  const int minimal = minimal_level(k);
  if (c.level >= 0) {
    if (c.level < minimal)
      throw config_error(fmt::format("basis level J={} is too coarse for k={} pyramids (support width 1/{}); "
                                     "the minimal level is J={}",
                                     c.level, k, k, minimal));
    return c.level;
  }
  return std::max(minimal, default_level(c.d, c.basis));
}

inline std::size_t resolve_truncation(const ExperimentConfig& c, const Basis& basis) {
  const std::size_t full = basis_size(basis);
  if (c.truncation == 0) return full;
  if (c.truncation > full)
    throw config_error(fmt::format("basis.truncation={} exceeds the basis size {} of {}", c.truncation, full,
                                   basis_id(basis)));
  return c.truncation;
}

/// Preset spectrum over K coordinates; `matched` uses the supplied mean squared coefficients.
inline std::pair<Spectrum, std::string> preset_spectrum(const ExperimentConfig& c, const std::string& preset,
                                                        std::size_t K, const std::string& id,
                                                        const std::vector<double>& matched) {
  if (preset == "matched") return {matched_spectrum(matched, id), "matched"};
  if (preset == "polynomial")
    return {polynomial_spectrum(K, c.tau, c.alpha, c.d, id), fmt::format("polynomial:tau={}:alpha={}", c.tau, c.alpha)};
  if (preset == "exponential")
    return {exponential_spectrum(K, c.tau, c.rate, id), fmt::format("exponential:tau={}:rate={}", c.tau, c.rate)};
  if (preset == "flat") return {flat_spectrum(K, c.tau, id), fmt::format("flat:tau={}", c.tau)};
  throw config_error("unknown spectrum preset '" + preset + "'");
}

/// Seed of the task (grid point i, spectrum s).
inline Seed task_seed(Seed master, std::size_t grid_index, std::size_t spectrum_index) {
  return derive_seed(derive_seed(master, grid_index), spectrum_index);
}

struct FamilyAtN {
  GridChoice grid;
  PyramidFamily family;
  Basis basis;
  CoefficientMatrix coeffs;
};

inline FamilyAtN family_at(const ExperimentConfig& c, double n) {
  const auto grid = choose_grid(c.d, n);
  auto family = build_pyramid_family(c.d, grid.k);
  Basis basis = make_basis(c.basis, c.d, resolve_level(c, grid.k));
  const std::size_t K = resolve_truncation(c, basis);
  auto coeffs = compute_coefficients(family, basis, K);
  return {grid, std::move(family), std::move(basis), std::move(coeffs)};
}

inline std::vector<Fit> collect_fits(const std::vector<std::string>& groups,
                                     const std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>& series,
                                     std::map<std::string, SlopeFit>& by_group) {
  std::vector<Fit> fits;
  for (const auto& g : groups) {
    const auto& [x, y] = series.at(g);
    const SlopeFit f = fit_log_slope(x, y);
    by_group[g] = f;
    fits.push_back({g, f.points, f.slope, f.lower, f.upper});
  }
  return fits;
}

/// Rows per (n, spectrum): worst-member exact risk, optional MC risk, bounds, optional
/// contraction probabilities at radii mu/4 and gamma/5 (gamma^2 = the rate floor), and the
/// log-log slope of the worst-member risk over the grid.
inline Report run_rate_study(const ExperimentConfig& config) {
  validate(config);
  ExperimentConfig c = config;
  if (c.mode == "risk" && c.replications == 0) c.replications = 1000;
  const bool contraction = c.mode == "contraction";

  struct Pending {
    std::vector<Cell> row;
    std::string group;
  };
  std::vector<Pending> pending;
  std::vector<std::string> groups;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;

  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    const double n = c.n_grid[i];
    const auto at = family_at(c, n);
    const auto T = mean_square_coefficients(at.coeffs);
    const double lemma4 = risk_lower_bound(at.coeffs, n);
    const double floor = theorem2_floor(c.d, n);
    const auto K = at.coeffs.truncation();
    for (std::size_t s = 0; s < c.spectra.size(); ++s) {
      const auto [spectrum, sid] = preset_spectrum(c, c.spectra[s], K, at.coeffs.basis_id, T);
      const auto worst = max_member_risk(spectrum, at.coeffs, n);
      const auto truth = member_truth(at.coeffs, worst.index);
      const Seed seed = task_seed(c.seed, i, s);
      Cell mc = std::monostate{}, mc_se = std::monostate{};
      if (c.replications >= 2) {
        const auto est = mc_risk(spectrum, truth, n, c.replications, derive_seed(seed, 0), c.threads);
        mc = est.estimate;
        mc_se = est.std_error;
      }
      if (std::find(groups.begin(), groups.end(), sid) == groups.end()) groups.push_back(sid);
      series[sid].first.push_back(n);
      series[sid].second.push_back(worst.risk);
      auto base = [&](Cell prob, Cell radius) {
        return std::vector<Cell>{std::int64_t{c.d}, n, std::int64_t{at.grid.k}, static_cast<std::int64_t>(at.grid.m),
                                 sid, static_cast<std::int64_t>(K), worst.risk, mc, mc_se, lemma4, floor,
                                 std::move(prob), std::move(radius), std::monostate{}, seed};
      };
      if (contraction) {
        const double radii[2] = {std::sqrt(worst.risk) / 4.0, std::sqrt(floor) / 5.0};
        for (int r = 0; r < 2; ++r) {
          const auto p = contraction_probability(spectrum, truth, n, radii[r], c.outer, c.inner,
                                                 derive_seed(seed, 1 + static_cast<std::uint64_t>(r)), c.threads);
          pending.push_back({base(p.estimate, radii[r]), sid});
        }
      } else {
        pending.push_back({base(std::monostate{}, std::monostate{}), sid});
      }
    }
  }

  Report report{"risk", to_ini(c), {}, {risk_columns(), {}}};
  std::map<std::string, SlopeFit> by_group;
  report.fits = collect_fits(groups, series, by_group);
  const std::size_t slope_col = report.table.column("slope");
  for (auto& p : pending) {
    if (const auto& f = by_group[p.group]; f.slope) p.row[slope_col] = *f.slope;
    report.table.rows.push_back(std::move(p.row));
  }
  return report;
}

/// GP posterior-mean risk against c^2 times the one-sparse linear minimax risk, with the
/// brute-force scalar oracle alongside the closed form.
inline Report run_minimax_study(const ExperimentConfig& config) {
  validate(config);
  const auto& c = config;
  Report report{"minimax", to_ini(c), {}, {minimax_columns(), {}}};
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    const double n = c.n_grid[i];
    const auto at = family_at(c, n);
    const auto T = mean_square_coefficients(at.coeffs);
    const auto model = make_one_sparse_model(at.family.m, at.coeffs.norm_sq, n);
    const auto lm = linear_minimax_risk(model.m, model.sigma);
    const auto bf = brute_force_minimax(model.m, model.sigma, 100001);
    for (std::size_t s = 0; s < c.spectra.size(); ++s) {
      const auto [spectrum, sid] = preset_spectrum(c, c.spectra[s], at.coeffs.truncation(), at.coeffs.basis_id, T);
      const auto dom = gp_mean_dominates_linear(spectrum, at.coeffs, n);
      report.table.rows.push_back({std::int64_t{c.d}, n, std::int64_t{at.grid.k}, static_cast<std::int64_t>(at.grid.m), sid,
                                   static_cast<std::int64_t>(at.coeffs.truncation()), model.c_sq, model.sigma, lm.risk,
                                   lm.a_star, bf.risk, dom.linear_minimax, dom.gp_risk_max,
                                   std::int64_t{dom.holds ? 1 : 0}, task_seed(c.seed, i, s)});
    }
  }
  return report;
}

/// ILB study on the Haar basis with the sawtooth surrogate at level min(j_n, J).
inline Report run_wavelet_study(const ExperimentConfig& config) {
  validate(config);
  const auto& c = config;
  const int J = c.level >= 0 ? c.level : default_level(c.d, "haar");
  const HaarTensorBasis basis(c.d, J);
  std::vector<std::string> groups;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  std::vector<std::pair<std::vector<Cell>, std::string>> pending;
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    const double n = c.n_grid[i];
    const int j = std::min(surrogate_level(c.d, n), J);
    const auto theta = haar_coefficients(basis, SawtoothSurrogate{c.d, j});
    std::vector<double> squares(theta.size());
    std::int64_t saturated = 0;
    for (std::size_t q = 0; q < theta.size(); ++q) {
      squares[q] = theta[q] * theta[q];
      if (squares[q] >= 1.0 / n) ++saturated;
    }
    const TruthCoefficients truth{theta, basis.id(), 0.0};
    const double ilb = ilb_risk_bound(theta, n);
    const double ilb_floor = ilb_bayes_floor(theta, n);
    const double rate = theorem3_rate(c.d, n);
    for (std::size_t s = 0; s < c.spectra.size(); ++s) {
      const auto [spectrum, sid] = preset_spectrum(c, c.spectra[s], basis.size(), basis.id(), squares);
      const double risk = exact_risk(spectrum, truth, n);
      if (std::find(groups.begin(), groups.end(), sid) == groups.end()) groups.push_back(sid);
      series[sid].first.push_back(n);
      series[sid].second.push_back(risk);
      pending.push_back({{std::int64_t{c.d}, n, std::int64_t{j}, static_cast<std::int64_t>(basis.size()), sid, risk, ilb,
                          ilb_floor, saturated, rate * rate, std::monostate{},
                          std::int64_t{risk >= ilb - 1e-12 ? 1 : 0}, task_seed(c.seed, i, s)},
                         sid});
    }
  }
  Report report{"wavelet", to_ini(c), {}, {wavelet_columns(), {}}};
  std::map<std::string, SlopeFit> by_group;
  report.fits = collect_fits(groups, series, by_group);
  const std::size_t slope_col = report.table.column("slope");
  for (auto& [row, group] : pending) {
    if (const auto& f = by_group[group]; f.slope) row[slope_col] = *f.slope;
    report.table.rows.push_back(std::move(row));
  }
  return report;
}

inline Report run_study(const ExperimentConfig& c) {
  if (c.mode == "minimax") return run_minimax_study(c);
  if (c.mode == "wavelet") return run_wavelet_study(c);
  if (c.mode == "risk" || c.mode == "rates" || c.mode == "contraction") return run_rate_study(c);
  throw config_error("mode '" + c.mode + "' does not produce a report");
}

}  // namespace gplb
