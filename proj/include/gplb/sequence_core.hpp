#pragma once

// Gaussian white-noise sequence model Y_k = theta_k + w_k / sqrt(n) under a mean-zero GP prior
// with Karhunen-Loeve variances lambda_k. Everything is expressed over a truncated coefficient
// vector; squared L2 distances are squared l2 norms by Parseval.

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gplb/errors.hpp"
#include "gplb/random.hpp"

namespace gplb {

/// Prior variances in a fixed orthonormal basis, truncated at K = eigenvalues.size().
/// Zero entries are allowed and describe a finite-rank prior on that coordinate.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::string basis_id;
  /// Neglected trace sum_{k>K} lambda_k, only when known in closed form.
  std::optional<double> tail_trace;

  std::size_t size() const noexcept { return eigenvalues.size(); }
};

/// theta_k = <f, phi_k>. `tail_energy` is ||f||^2 minus the captured energy, when the caller
/// knows ||f||^2; it enters every risk as pure bias since the prior has no mass beyond K.
struct TruthCoefficients {
  std::vector<double> theta;
  std::string basis_id;
  double tail_energy = 0.0;

  std::size_t size() const noexcept { return theta.size(); }
};

struct SequenceObservation {
  std::vector<double> coefficients;
  double n = 1.0;
  std::string basis_id;
};

struct GPPosterior {
  std::vector<double> means;
  std::vector<double> variances;
  std::vector<double> weights;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

namespace detail {

inline void require_positive_n(double n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw domain_error("sample size n must be positive and finite");
}

inline void require_match(const Spectrum& s, const TruthCoefficients& t) {
  if (s.basis_id != t.basis_id)
    throw contract_error("basis mismatch: spectrum '" + s.basis_id + "' vs truth '" + t.basis_id + "'");
  if (s.size() != t.size())
    throw contract_error("length mismatch: spectrum K=" + std::to_string(s.size()) +
                         " vs truth K=" + std::to_string(t.size()));
}

}  // namespace detail

/// Validates and wraps a spectrum.
inline Spectrum make_spectrum(std::vector<double> eigenvalues, std::string basis_id,
                              std::optional<double> tail_trace = std::nullopt) {
  if (eigenvalues.empty()) throw domain_error("spectrum needs K >= 1");
  double trace = 0.0;
  for (double v : eigenvalues) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw domain_error("spectrum entries must be finite and >= 0");
    trace += v;
  }
  if (!std::isfinite(trace)) throw domain_error("spectrum trace is not finite");
  if (tail_trace && !(*tail_trace >= 0.0)) throw domain_error("tail trace must be >= 0");
  return Spectrum{std::move(eigenvalues), std::move(basis_id), tail_trace};
}

/// a = n lambda / (n lambda + 1); lambda = 0 gives 0.
inline double shrinkage_weight(double lambda, double n) noexcept {
  const double t = n * lambda;
  return t / (t + 1.0);
}

/// Y_k = theta_k + w_k / sqrt(n), w_k iid N(0, 1).
template <class Rng>
SequenceObservation sample_observation(const TruthCoefficients& truth, double n, Rng& rng) {
  detail::require_positive_n(n);
  std::normal_distribution<double> normal;
  const double noise = 1.0 / std::sqrt(n);
  SequenceObservation obs{std::vector<double>(truth.size()), n, truth.basis_id};
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (!std::isfinite(truth.theta[k])) throw domain_error("truth coefficients must be finite");
    obs.coefficients[k] = truth.theta[k] + noise * normal(rng);
  }
  return obs;
}

inline GPPosterior posterior_update(const Spectrum& spectrum, const SequenceObservation& obs) {
  if (spectrum.basis_id != obs.basis_id)
    throw contract_error("basis mismatch: spectrum '" + spectrum.basis_id + "' vs observation '" +
                         obs.basis_id + "'");
  if (spectrum.size() != obs.coefficients.size())
    throw contract_error("length mismatch between spectrum and observation");
  detail::require_positive_n(obs.n);
  const std::size_t K = spectrum.size();
  GPPosterior post{std::vector<double>(K), std::vector<double>(K), std::vector<double>(K)};
  for (std::size_t k = 0; k < K; ++k) {
    const double lambda = spectrum.eigenvalues[k];
    const double a = shrinkage_weight(lambda, obs.n);
    post.weights[k] = a;
    post.means[k] = a * obs.coefficients[k];
    post.variances[k] = lambda / (obs.n * lambda + 1.0);
  }
  return post;
}

/// E_f ||posterior mean - f||^2 = sum_k (a_k - 1)^2 theta_k^2 + a_k^2 / n  (+ tail bias).
inline double exact_risk(const Spectrum& spectrum, const TruthCoefficients& truth, double n) {
  detail::require_match(spectrum, truth);
  detail::require_positive_n(n);
  double risk = 0.0;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double t = n * spectrum.eigenvalues[k];
    const double bias = truth.theta[k] / (t + 1.0);  // (1 - a) theta
    const double a = t / (t + 1.0);
    risk += bias * bias + a * a / n;
  }
  return risk + truth.tail_energy;
}

/// Squared errors ||posterior mean - f||^2 of `replications` independent draws, in draw order.
inline std::vector<double> posterior_mean_errors(const Spectrum& spectrum, const TruthCoefficients& truth,
                                                 double n, std::size_t replications, Seed seed) {
  detail::require_match(spectrum, truth);
  detail::require_positive_n(n);
  const std::size_t K = spectrum.size();
  std::vector<double> weights(K);
  for (std::size_t k = 0; k < K; ++k) weights[k] = shrinkage_weight(spectrum.eigenvalues[k], n);
  const double noise = 1.0 / std::sqrt(n);
  std::vector<double> out;
  out.reserve(replications);
  const std::size_t blocks = (replications + kBlockSize - 1) / kBlockSize;
  for (std::size_t b = 0; b < blocks; ++b) {
    Engine engine = make_engine(derive_seed(seed, b));
    std::normal_distribution<double> normal;
    const std::size_t count = std::min(kBlockSize, replications - b * kBlockSize);
    for (std::size_t r = 0; r < count; ++r) {
      double err = truth.tail_energy;
      for (std::size_t k = 0; k < K; ++k) {
        const double y = truth.theta[k] + noise * normal(engine);
        const double e = weights[k] * y - truth.theta[k];
        err += e * e;
      }
      out.push_back(err);
    }
  }
  return out;
}

/// Monte Carlo mean and standard error of ||posterior mean - f||^2.
inline McEstimate mc_risk(const Spectrum& spectrum, const TruthCoefficients& truth, double n,
                          std::size_t replications, Seed seed, unsigned threads = 1) {
  if (replications < 2) throw domain_error("mc_risk needs at least 2 replications");
  detail::require_match(spectrum, truth);
  detail::require_positive_n(n);
  const std::size_t K = spectrum.size();
  std::vector<double> weights(K);
  for (std::size_t k = 0; k < K; ++k) weights[k] = shrinkage_weight(spectrum.eigenvalues[k], n);
  const double noise = 1.0 / std::sqrt(n);
  const RunningStats stats = run_blocks(replications, seed, threads,
                                        [&](Engine& engine, RunningStats& acc, std::size_t count) {
    std::normal_distribution<double> normal;
    for (std::size_t r = 0; r < count; ++r) {
      double err = truth.tail_energy;
      for (std::size_t k = 0; k < K; ++k) {
        const double y = truth.theta[k] + noise * normal(engine);
        const double e = weights[k] * y - truth.theta[k];
        err += e * e;
      }
      acc.push(err);
    }
  });
  return {stats.mean, stats.standard_error()};
}

inline constexpr std::size_t kDefaultOuter = 200;
inline constexpr std::size_t kDefaultInner = 500;

/// Nested Monte Carlo estimate of E_f0 Pi_n(f : ||f - f0|| >= radius | Y). The outer loop draws
/// data, the inner loop draws from the conjugate posterior. The standard error is taken across
/// outer draws.
inline McEstimate contraction_probability(const Spectrum& spectrum, const TruthCoefficients& truth,
                                          double n, double radius, std::size_t outer,
                                          std::size_t inner, Seed seed, unsigned threads = 1) {
  if (!(radius > 0.0)) throw domain_error("radius must be positive");
  if (outer < 1 || inner < 1) throw domain_error("outer and inner sizes must be >= 1");
  detail::require_match(spectrum, truth);
  detail::require_positive_n(n);
  const std::size_t K = spectrum.size();
  std::vector<double> weights(K), sds(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double lambda = spectrum.eigenvalues[k];
    weights[k] = shrinkage_weight(lambda, n);
    sds[k] = std::sqrt(lambda / (n * lambda + 1.0));
  }
  const double noise = 1.0 / std::sqrt(n);
  const double radius_sq = radius * radius;
  const RunningStats stats = run_blocks(outer, seed, threads,
                                        [&](Engine& engine, RunningStats& acc, std::size_t count) {
    std::normal_distribution<double> normal;
    std::vector<double> offset(K);
    for (std::size_t o = 0; o < count; ++o) {
      for (std::size_t k = 0; k < K; ++k) {
        const double y = truth.theta[k] + noise * normal(engine);
        offset[k] = weights[k] * y - truth.theta[k];  // posterior mean minus truth
      }
      std::size_t outside = 0;
      for (std::size_t i = 0; i < inner; ++i) {
        double dist = truth.tail_energy;
        for (std::size_t k = 0; k < K; ++k) {
          const double e = offset[k] + sds[k] * normal(engine);
          dist += e * e;
        }
        if (dist >= radius_sq) ++outside;
      }
      acc.push(static_cast<double>(outside) / static_cast<double>(inner));
    }
  });
  return {stats.mean, stats.standard_error()};
}

// Spectrum presets. Index k below is 1-based position in the basis ordering.

/// lambda_k = tau k^{-(1 + 2 alpha / d)}.
inline Spectrum polynomial_spectrum(std::size_t K, double tau, double alpha, int d, std::string basis_id) {
  if (!(tau > 0.0) || d < 1) throw domain_error("polynomial spectrum needs tau > 0, d >= 1");
  std::vector<double> lambda(K);
  const double exponent = 1.0 + 2.0 * alpha / d;
  for (std::size_t k = 0; k < K; ++k) lambda[k] = tau * std::pow(static_cast<double>(k + 1), -exponent);
  return make_spectrum(std::move(lambda), std::move(basis_id));
}

/// lambda_k = tau exp(-rate (k - 1)).
inline Spectrum exponential_spectrum(std::size_t K, double tau, double rate, std::string basis_id) {
  if (!(tau > 0.0) || !(rate >= 0.0)) throw domain_error("exponential spectrum needs tau > 0, rate >= 0");
  std::vector<double> lambda(K);
  for (std::size_t k = 0; k < K; ++k) lambda[k] = tau * std::exp(-rate * static_cast<double>(k));
  return make_spectrum(std::move(lambda), std::move(basis_id));
}

inline Spectrum flat_spectrum(std::size_t K, double tau, std::string basis_id) {
  if (!(tau > 0.0)) throw domain_error("flat spectrum needs tau > 0");
  return make_spectrum(std::vector<double>(K, tau), std::move(basis_id));
}

/// lambda_k = T_k: the prior whose weights a_k = n T_k / (1 + n T_k) minimise the average risk
/// over a family with mean squared coefficients T_k.
inline Spectrum matched_spectrum(std::vector<double> mean_sq_coefficients, std::string basis_id) {
  return make_spectrum(std::move(mean_sq_coefficients), std::move(basis_id));
}

/// Random decay profile with random scale, used by the property suites.
template <class Rng>
Spectrum random_spectrum(std::size_t K, std::string basis_id, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double tau = std::pow(10.0, -6.0 + 8.0 * unit(rng));
  const int profile = static_cast<int>(unit(rng) * 4.0);
  const double p = 0.5 + 3.5 * unit(rng);
  const double beta = std::pow(10.0, -3.0 + 3.0 * unit(rng));
  const std::size_t step_at = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(K));
  const bool jitter = unit(rng) < 0.5;
  std::vector<double> lambda(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double idx = static_cast<double>(k + 1);
    double v = tau;
    switch (profile) {
      case 0: v = tau * std::pow(idx, -p); break;
      case 1: v = tau * std::exp(-beta * (idx - 1.0)); break;
      case 2: v = tau; break;
      default: v = k < step_at ? tau : tau * 1e-4; break;
    }
    if (jitter) v *= std::exp(0.5 * normal(rng));
    lambda[k] = v;
  }
  return make_spectrum(std::move(lambda), std::move(basis_id));
}

}  // namespace gplb
