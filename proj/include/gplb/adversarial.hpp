#pragma once

// Adversarial pyramid families f_a(x) = (1/(2k) - |x - a|_1)_+ centred on the k^d grid
// midpoints, their basis coefficients, and the constants and thresholds of the lower bounds.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gplb/basis.hpp"
#include "gplb/errors.hpp"
#include "gplb/quadrature.hpp"
#include "gplb/sequence_core.hpp"

namespace gplb {

struct PyramidFamily {
  int d = 1;
  std::int64_t k = 1;
  std::size_t m = 1;
  double bandwidth = 0.5;       // 1/(2k): peak height and l1 support radius
  std::vector<double> centers;  // m x d, row-major; member j has grid coordinates in base k

  std::span<const double> center(std::size_t j) const {
    return std::span<const double>(centers).subspan(j * static_cast<std::size_t>(d), static_cast<std::size_t>(d));
  }
};

inline PyramidFamily build_pyramid_family(int d, std::int64_t k) {
  if (d < 1 || k < 1) throw domain_error("pyramid family needs d >= 1 and k >= 1");
  std::size_t m = 1;
  constexpr std::size_t limit = std::size_t{1} << 40;
  for (int i = 0; i < d; ++i) {
    if (m > limit / static_cast<std::size_t>(k)) throw domain_error("k^d overflows the family size limit");
    m *= static_cast<std::size_t>(k);
  }
  if (m * static_cast<std::size_t>(d) > (std::size_t{1} << 28))
    throw domain_error("pyramid family too large to materialise");
  PyramidFamily fam{d, k, m, 0.5 / static_cast<double>(k), std::vector<double>(m * static_cast<std::size_t>(d))};
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t rest = j;
    for (int a = d - 1; a >= 0; --a) {
      const auto ell = static_cast<double>(rest % static_cast<std::size_t>(k)) + 1.0;
      rest /= static_cast<std::size_t>(k);
      fam.centers[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = (ell - 0.5) / static_cast<double>(k);
    }
  }
  return fam;
}

/// Family from a raw size: the largest k with k^d <= m, warning when m is not a d-th power.
inline PyramidFamily family_for_size(int d, std::size_t m, std::ostream* warnings = &std::clog) {
  if (d < 1 || m < 1) throw domain_error("family size needs d >= 1 and m >= 1");
  std::int64_t k = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(m), 1.0 / d))));
  auto power = [d](std::int64_t base) {
    long double v = 1;
    for (int i = 0; i < d; ++i) v *= static_cast<long double>(base);
    return v;
  };
  while (power(k + 1) <= static_cast<long double>(m)) ++k;
  while (k > 1 && power(k) > static_cast<long double>(m)) --k;
  if (power(k) != static_cast<long double>(m) && warnings)
    *warnings << "warning: m=" << m << " is not a perfect " << d << "-th power; using k=" << k
              << " (m=" << static_cast<std::size_t>(power(k)) << ")\n";
  return build_pyramid_family(d, k);
}

inline double evaluate_pyramid(const PyramidFamily& fam, std::size_t j, std::span<const double> x) {
  if (j >= fam.m) throw domain_error("pyramid index out of range");
  if (x.size() != static_cast<std::size_t>(fam.d)) throw domain_error("point has wrong dimension");
  double l1 = 0.0;
  const auto a = fam.center(j);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw domain_error("point outside [0,1]^d");
    l1 += std::abs(x[i] - a[i]);
  }
  return std::max(0.0, fam.bandwidth - l1);
}

inline double log_factorial(int n) {
  if (n < 0) throw domain_error("factorial of a negative number");
  if (n <= 15) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return std::log(f);
  }
  return std::lgamma(static_cast<double>(n) + 1.0);
}

/// log r_d with r_d = 1 / (2 (d+2)!).
inline double log_rd(int d) { return -std::log(2.0) - log_factorial(d + 2); }

/// ||f_a||^2 = k^{-(d+2)} / (2 (d+2)!).
inline double pyramid_norm_sq(int d, std::int64_t k) {
  if (d < 1 || k < 1) throw domain_error("pyramid_norm_sq needs d, k >= 1");
  if (d <= 15) {
    double fact = 1.0;
    for (int i = 2; i <= d + 2; ++i) fact *= i;
    return std::pow(static_cast<double>(k), -(d + 2)) / (2.0 * fact);
  }
  return std::exp(log_rd(d) - (d + 2) * std::log(static_cast<double>(k)));
}

/// Exact integral of member j over the box prod [lo_i, hi_i].
inline double pyramid_box_integral(const PyramidFamily& fam, std::size_t j, std::span<const double> lo,
                                   std::span<const double> hi) {
  const std::size_t d = static_cast<std::size_t>(fam.d);
  const auto a = fam.center(j);
  const double h = fam.bandwidth;
  // Each axis contributes up to two u-intervals (u = |x - a|): the parts left and right of a.
  double piece_lo[64][2], piece_hi[64][2];
  int pieces[64];
  if (d > 64) throw domain_error("pyramid_box_integral supports d <= 64");
  double nearest = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double l = std::max(lo[i], a[i] - h);
    const double r = std::min(hi[i], a[i] + h);
    if (!(r > l)) return 0.0;
    nearest += (a[i] < l) ? l - a[i] : (a[i] > r ? a[i] - r : 0.0);
    int c = 0;
    if (l < a[i]) {
      piece_lo[i][c] = a[i] - std::min(r, a[i]);
      piece_hi[i][c] = a[i] - l;
      ++c;
    }
    if (r > a[i]) {
      piece_lo[i][c] = std::max(l, a[i]) - a[i];
      piece_hi[i][c] = r - a[i];
      ++c;
    }
    pieces[i] = c;
  }
  if (nearest >= h) return 0.0;
  const PiecewiseLinear profile = hat_profile(h);
  std::vector<double> ulo(d), uhi(d);
  std::vector<int> choice(d, 0);
  double total = 0.0;
  while (true) {
    for (std::size_t i = 0; i < d; ++i) {
      ulo[i] = piece_lo[i][choice[i]];
      uhi[i] = piece_hi[i][choice[i]];
    }
    total += box_ridge_integral(profile, ulo, uhi);
    std::size_t i = 0;
    while (i < d && ++choice[i] == pieces[i]) choice[i++] = 0;
    if (i == d) break;
  }
  return total;
}

/// m x K matrix of <f_j, phi_k> for a family and a truncated basis.
struct CoefficientMatrix {
  Eigen::MatrixXd entries;
  std::string basis_id;
  int d = 1;
  std::int64_t k = 1;
  double norm_sq = 0.0;  // common ||f_j||^2

  std::size_t members() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  std::size_t truncation() const noexcept { return static_cast<std::size_t>(entries.cols()); }
};

namespace detail {

// Nested Gauss-Legendre over the l1 ball around `center`, with panels split at the centre and
// at the moving support edge on every axis; innermost integrand is the remaining radius.
inline double pyramid_separable_product(std::span<const double> center, double radius,
                                        const std::vector<std::uint32_t>& freq, std::size_t panels) {
  const std::size_t d = center.size();
  auto level = [&](auto&& self, std::size_t axis, double R) -> double {
    if (R <= 0.0) return 0.0;
    if (axis == d) return R;
    const double a = center[axis];
    auto integrand = [&](double x) {
      return CosineTensorBasis::axis_function(freq[axis], x) * self(self, axis + 1, R - std::abs(x - a));
    };
    return gauss_legendre(integrand, a - R, a, panels) + gauss_legendre(integrand, a, a + R, panels);
  };
  return level(level, 0, radius);
}

}  // namespace detail

inline constexpr double kCoefficientTolerance = 1e-10;

inline CoefficientMatrix compute_coefficients(const PyramidFamily& fam, const Basis& basis, std::size_t K) {
  if (basis_dimension(basis) != fam.d) throw contract_error("basis dimension differs from family dimension");
  if (K < 1 || K > basis_size(basis))
    throw domain_error("truncation K=" + std::to_string(K) + " outside [1, " + std::to_string(basis_size(basis)) + "]");
  CoefficientMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(fam.m), static_cast<Eigen::Index>(K)),
                        basis_id(basis), fam.d, fam.k, pyramid_norm_sq(fam.d, fam.k)};
  if (const auto* haar = std::get_if<HaarTensorBasis>(&basis)) {
    for (std::size_t j = 0; j < fam.m; ++j) {
      const auto row = haar->coefficients([&](std::span<const double> lo, std::span<const double> hi) {
        return pyramid_box_integral(fam, j, lo, hi);
      });
      for (std::size_t c = 0; c < K; ++c) out.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = row[c];
    }
    return out;
  }
  const auto& cosine = std::get<CosineTensorBasis>(basis);
  const std::size_t max_evals = 20'000'000;
  for (std::size_t c = 0; c < K; ++c) {
    const auto freq = cosine.frequencies(c);
    for (std::size_t j = 0; j < fam.m; ++j) {
      double previous = detail::pyramid_separable_product(fam.center(j), fam.bandwidth, freq, 1);
      std::size_t panels = 2;
      while (true) {
        const double current = detail::pyramid_separable_product(fam.center(j), fam.bandwidth, freq, panels);
        if (std::abs(current - previous) <= kCoefficientTolerance) {
          out.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = current;
          break;
        }
        panels *= 2;
        if (std::pow(16.0 * static_cast<double>(panels), fam.d) > static_cast<double>(max_evals)) {
          throw numerical_error("quadrature did not converge for member " + std::to_string(j) +
                                ", basis position " + std::to_string(c) + ": last estimates " +
                                std::to_string(previous) + " and " + std::to_string(current) + " at " +
                                std::to_string(panels / 2) + " panels per piece");
        }
        previous = current;
      }
    }
  }
  return out;
}

/// Member j as sequence-model truth, with the uncaptured energy as tail.
inline TruthCoefficients member_truth(const CoefficientMatrix& coeffs, std::size_t j) {
  const auto row = coeffs.entries.row(static_cast<Eigen::Index>(j));
  TruthCoefficients t{std::vector<double>(row.begin(), row.end()), coeffs.basis_id, 0.0};
  t.tail_energy = std::max(0.0, coeffs.norm_sq - row.squaredNorm());
  return t;
}

/// T_k = (1/m) sum_j <f_j, phi_k>^2.
inline std::vector<double> mean_square_coefficients(const CoefficientMatrix& coeffs) {
  const Eigen::VectorXd t = coeffs.entries.array().square().colwise().mean();
  return {t.data(), t.data() + t.size()};
}

/// sum_k T_k ^ (1/n).
inline double risk_lower_bound(const CoefficientMatrix& coeffs, double n) {
  if (!(n > 0.0)) throw domain_error("n must be positive");
  double total = 0.0;
  for (double t : mean_square_coefficients(coeffs)) total += std::min(t, 1.0 / n);
  return total;
}

/// sum_k T_k / (1 + n T_k) plus the mean tail: the minimum over all spectra on this basis of the
/// family-averaged risk, hence a lower bound on the worst member's risk.
inline double bayes_floor(const CoefficientMatrix& coeffs, double n) {
  if (!(n > 0.0)) throw domain_error("n must be positive");
  double total = 0.0;
  for (double t : mean_square_coefficients(coeffs)) total += t / (1.0 + n * t);
  double tail = 0.0;
  for (std::size_t j = 0; j < coeffs.members(); ++j)
    tail += std::max(0.0, coeffs.norm_sq - coeffs.entries.row(static_cast<Eigen::Index>(j)).squaredNorm());
  return total + tail / static_cast<double>(coeffs.members());
}

struct MemberRisk {
  std::size_t index = 0;
  double risk = 0.0;
};

/// max_j E_{f_j} ||posterior mean - f_j||^2.
inline MemberRisk max_member_risk(const Spectrum& spectrum, const CoefficientMatrix& coeffs, double n) {
  MemberRisk best{0, -1.0};
  for (std::size_t j = 0; j < coeffs.members(); ++j) {
    const double r = exact_risk(spectrum, member_truth(coeffs, j), n);
    if (r > best.risk) best = {j, r};
  }
  return best;
}

struct GridChoice {
  std::int64_t k = 1;
  std::size_t m = 1;
};

/// k = ceil((r_d n)^{1/(2d+2)}), m = k^d.
inline GridChoice choose_grid(int d, double n) {
  if (d < 1 || !(n >= 1.0)) throw domain_error("choose_grid needs d >= 1 and n >= 1");
  const double x = std::exp((log_rd(d) + std::log(n)) / (2.0 * d + 2.0));
  // Guard against x landing a rounding error above an integer.
  const double snapped = std::abs(x - std::round(x)) <= 1e-12 * std::max(1.0, x) ? std::round(x) : x;
  const auto k = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(snapped)));
  const auto fam_m = [&] {
    std::size_t m = 1;
    for (int i = 0; i < d; ++i) {
      if (m > (std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(k)))
        throw domain_error("k^d overflows");
      m *= static_cast<std::size_t>(k);
    }
    return m;
  }();
  return {k, fam_m};
}

/// Smallest Haar/cosine level J whose finest cells (2^{-(J+1)}) fit inside a pyramid half-width 1/(2k).
inline int minimal_level(std::int64_t k) {
  int J = 0;
  while ((std::int64_t{1} << (J + 1)) < 2 * k) ++J;
  return J;
}

struct TheoremConstants {
  double C_d = 0.0;        // posterior contraction constant
  double C_d_prime = 0.0;  // posterior mean risk constant
  double rate_exponent = 0.0;
};

inline TheoremConstants theorem_constants(int d) {
  if (d < 1) throw domain_error("theorem_constants needs d >= 1");
  const double power = d / (4.0 + 4.0 * d);
  const double common = std::exp(power * log_rd(d));
  return {common / (10.0 * std::ldexp(1.0, d)), common / std::ldexp(1.0, d + 1), (2.0 + d) / (4.0 + 4.0 * d)};
}

/// C_d'^2 n^{-(2+d)/(2+2d)}: the squared-risk floor for the posterior mean.
inline double theorem2_floor(int d, double n) {
  const double c = theorem_constants(d).C_d_prime;
  return c * c * std::pow(n, -(2.0 + d) / (2.0 + 2.0 * d));
}

/// 32 log(5 / (1 - sqrt(1 - 4 delta))).
inline double transfer_threshold(double delta) {
  if (!(delta > 0.0 && delta < 0.25)) throw domain_error("delta must lie in (0, 1/4)");
  return 32.0 * std::log(5.0 / (1.0 - std::sqrt(1.0 - 4.0 * delta)));
}

/// N(d, delta) = 2 (d+2)! 2^{(2d+2)^2/d} [32 log(5/(1-sqrt(1-4 delta)))]^{(d+2)/d}.
inline double n_threshold(int d, double delta) {
  if (d < 1) throw domain_error("n_threshold needs d >= 1");
  const double log_value = std::log(2.0) + log_factorial(d + 2) +
                           (2.0 * d + 2.0) * (2.0 * d + 2.0) / d * std::log(2.0) +
                           (d + 2.0) / d * std::log(transfer_threshold(delta));
  return std::exp(log_value);
}

}  // namespace gplb
