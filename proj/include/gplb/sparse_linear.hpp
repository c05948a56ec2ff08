#pragma once

// Reduction of an orthogonal equal-norm family to the one-sparse Gaussian sequence model
// y = theta + sigma w, theta in {e_1, ..., e_m}, and its linear minimax analysis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gplb/adversarial.hpp"
#include "gplb/errors.hpp"
#include "gplb/sequence_core.hpp"

namespace gplb {

struct OneSparseModel {
  std::size_t m = 1;
  double sigma = 1.0;  // 1 / (c sqrt(n))
  double c_sq = 1.0;   // common squared norm of the family
};

/// theta_hat = A y.
struct LinearEstimator {
  Eigen::MatrixXd A;
};

inline OneSparseModel make_one_sparse_model(std::size_t m, double c_sq, double n) {
  if (m < 1) throw domain_error("one-sparse model needs m >= 1");
  if (!(c_sq > 0.0) || !std::isfinite(c_sq)) throw contract_error("family norm must be positive (zero-signal family)");
  if (!(n > 0.0)) throw domain_error("n must be positive");
  return {m, 1.0 / std::sqrt(c_sq * n), c_sq};
}

/// Checks that a Gram matrix is diagonal with a constant diagonal and returns that diagonal.
inline double common_norm_sq(const Eigen::MatrixXd& gram, double rel_tol = 1e-9) {
  if (gram.rows() != gram.cols() || gram.rows() < 1) throw contract_error("Gram matrix must be square and nonempty");
  const double c_sq = gram(0, 0);
  if (!(c_sq > 0.0)) throw contract_error("family norm must be positive (zero-signal family)");
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    if (std::abs(gram(i, i) - c_sq) > rel_tol * c_sq)
      throw contract_error("family norms are not constant (member " + std::to_string(i) + ")");
    for (Eigen::Index j = 0; j < gram.cols(); ++j)
      if (i != j && std::abs(gram(i, j)) > rel_tol * c_sq)
        throw contract_error("family is not orthogonal (members " + std::to_string(i) + ", " + std::to_string(j) + ")");
  }
  return c_sq;
}

struct OneSparseDraw {
  std::vector<double> y;
  OneSparseModel model;
};

/// Draw from the reduced model for truth f_{j*}: y = e_{j*} + sigma w, exact because the
/// normalized members f_i / c are orthonormal, so their white-noise integrals are iid normal.
template <class Rng>
OneSparseDraw reduce_to_sequence(const OneSparseModel& model, std::size_t truth_index, Rng& rng) {
  if (truth_index >= model.m) throw domain_error("truth index out of range");
  std::normal_distribution<double> normal;
  std::vector<double> y(model.m);
  for (std::size_t i = 0; i < model.m; ++i) y[i] = (i == truth_index ? 1.0 : 0.0) + model.sigma * normal(rng);
  return {std::move(y), model};
}

template <class Rng>
OneSparseDraw reduce_to_sequence(const PyramidFamily& family, std::size_t truth_index, double n, Rng& rng) {
  return reduce_to_sequence(make_one_sparse_model(family.m, pyramid_norm_sq(family.d, family.k), n), truth_index, rng);
}

template <class Rng>
OneSparseDraw reduce_to_sequence(const Eigen::MatrixXd& gram, std::size_t truth_index, double n, Rng& rng) {
  const double c_sq = common_norm_sq(gram);
  return reduce_to_sequence(make_one_sparse_model(static_cast<std::size_t>(gram.rows()), c_sq, n), truth_index, rng);
}

/// y_i = (1/c^2) sum_k <f_i, phi_k> Y_k, computed from sequence-model data. Exact when every
/// member lies in the span of the truncated basis.
inline std::vector<double> reduce_observation(const CoefficientMatrix& coeffs, const SequenceObservation& obs) {
  if (obs.basis_id != coeffs.basis_id) throw contract_error("observation and coefficients use different bases");
  if (obs.coefficients.size() != coeffs.truncation()) throw contract_error("observation length differs from K");
  const Eigen::Map<const Eigen::VectorXd> Y(obs.coefficients.data(), static_cast<Eigen::Index>(obs.coefficients.size()));
  const Eigen::VectorXd y = coeffs.entries * Y / coeffs.norm_sq;
  return {y.data(), y.data() + y.size()};
}

/// |(A - I) e_j|^2 + sigma^2 tr(A A^T).
inline double linear_estimator_risk(const LinearEstimator& est, std::size_t j, double sigma) {
  const auto& A = est.A;
  if (A.rows() != A.cols()) throw contract_error("estimator matrix must be square");
  if (j >= static_cast<std::size_t>(A.rows())) throw domain_error("theta index out of range");
  if (!(sigma > 0.0)) throw domain_error("sigma must be positive");
  Eigen::VectorXd col = A.col(static_cast<Eigen::Index>(j));
  col(static_cast<Eigen::Index>(j)) -= 1.0;
  return col.squaredNorm() + sigma * sigma * A.squaredNorm();
}

inline double max_linear_risk(const LinearEstimator& est, double sigma) {
  double worst = 0.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(est.A.rows()); ++j)
    worst = std::max(worst, linear_estimator_risk(est, j, sigma));
  return worst;
}

struct DiagonalReduction {
  double a_bar = 0.0;
  double max_risk = 0.0;           // of A
  double max_risk_diagonal = 0.0;  // of a_bar I
  bool dominated = false;
};

/// a_bar = sqrt(mean a_jj^2); a_bar I never has larger worst-case risk than A.
inline DiagonalReduction diagonal_reduction(const LinearEstimator& est, double sigma) {
  const auto m = est.A.rows();
  if (m < 1 || est.A.cols() != m) throw contract_error("estimator matrix must be square and nonempty");
  DiagonalReduction out;
  out.a_bar = std::sqrt(est.A.diagonal().squaredNorm() / static_cast<double>(m));
  out.max_risk = max_linear_risk(est, sigma);
  out.max_risk_diagonal = max_linear_risk({out.a_bar * Eigen::MatrixXd::Identity(m, m)}, sigma);
  out.dominated = out.max_risk_diagonal <= out.max_risk * (1.0 + 1e-12) + 1e-15;
  return out;
}

struct LinearMinimax {
  double risk = 0.0;
  double a_star = 0.0;
};

/// m sigma^2 / (1 + m sigma^2), attained by a* I with a* = 1 / (1 + m sigma^2).
inline LinearMinimax linear_minimax_risk(std::size_t m, double sigma) {
  if (m < 1 || !(sigma > 0.0)) throw domain_error("linear minimax needs m >= 1 and sigma > 0");
  const double s = static_cast<double>(m) * sigma * sigma;
  return {s / (1.0 + s), 1.0 / (1.0 + s)};
}

struct GridMinimum {
  double risk = 0.0;
  double argmin = 0.0;
};

/// min over a uniform grid on [0, 1] of (a - 1)^2 + m sigma^2 a^2.
inline GridMinimum brute_force_minimax(std::size_t m, double sigma, std::size_t grid_size) {
  if (grid_size < 2) throw domain_error("grid needs at least two points");
  if (m < 1 || !(sigma > 0.0)) throw domain_error("brute force minimax needs m >= 1 and sigma > 0");
  const double s = static_cast<double>(m) * sigma * sigma;
  GridMinimum best{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    const double r = (a - 1.0) * (a - 1.0) + s * a * a;
    if (r < best.risk) best = {r, a};
  }
  return best;
}

/// Search over all m x m matrices with entries on a uniform grid of [lo, hi] (m <= 2).
inline double exhaustive_minimax(std::size_t m, double sigma, std::size_t grid_size, double lo = -0.25, double hi = 1.0) {
  if (m < 1 || m > 2) throw domain_error("exhaustive search supports m in {1, 2}");
  if (grid_size < 2) throw domain_error("grid needs at least two points");
  const std::size_t entries = m * m;
  std::size_t total = 1;
  for (std::size_t e = 0; e < entries; ++e) total *= grid_size;
  LinearEstimator est{Eigen::MatrixXd(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))};
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t e = 0; e < entries; ++e) {
      const double t = static_cast<double>(rest % grid_size) / static_cast<double>(grid_size - 1);
      rest /= grid_size;
      est.A(static_cast<Eigen::Index>(e / m), static_cast<Eigen::Index>(e % m)) = lo + (hi - lo) * t;
    }
    best = std::min(best, max_linear_risk(est, sigma));
  }
  return best;
}

struct DominanceCheck {
  double gp_risk_max = 0.0;
  double linear_minimax = 0.0;  // c^2 m sigma^2 / (1 + m sigma^2)
  bool holds = false;
};

/// Worst member risk of the GP posterior mean against c^2 times the one-sparse linear minimax risk.
inline DominanceCheck gp_mean_dominates_linear(const Spectrum& spectrum, const CoefficientMatrix& coeffs, double n) {
  const auto model = make_one_sparse_model(coeffs.members(), coeffs.norm_sq, n);
  DominanceCheck out;
  out.gp_risk_max = max_member_risk(spectrum, coeffs, n).risk;
  out.linear_minimax = model.c_sq * linear_minimax_risk(model.m, model.sigma).risk;
  out.holds = out.gp_risk_max >= out.linear_minimax - 1e-12;
  return out;
}

}  // namespace gplb
