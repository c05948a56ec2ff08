#pragma once

// Tensor-product Haar basis on [0,1]^d and Gaussian wavelet series priors.
//
// One-dimensional Haar functions are indexed by i in [0, 2^{J+1}): i = 0 is the scaling
// function (level -1), and i = 2^j + t is psi_{j,t} = 2^{j/2} (1 on the left half of
// [t 2^-j, (t+1) 2^-j), -1 on the right half). A tensor index is one such i per axis. Basis
// positions are ordered by shell (the largest per-axis level, scaling counting as -1) and then
// row-major, so prefixes of the ordering are complete through a level.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gplb/errors.hpp"
#include "gplb/quadrature.hpp"
#include "gplb/sequence_core.hpp"

namespace gplb {

struct HaarIndex {
  int level = -1;  // -1 is the scaling function
  std::uint32_t translate = 0;

  friend bool operator==(const HaarIndex&, const HaarIndex&) = default;
};

/// One Haar index per axis.
using WaveletIndex = std::vector<HaarIndex>;

inline HaarIndex haar_index_1d(std::uint32_t i) noexcept {
  if (i == 0) return {-1, 0};
  const int level = static_cast<int>(std::bit_width(i)) - 1;
  return {level, i - (std::uint32_t{1} << level)};
}

inline double haar_1d(std::uint32_t i, double x) noexcept {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (i == 0) return 1.0;
  const auto [level, t] = haar_index_1d(i);
  const double scale = std::ldexp(1.0, level);
  const double u = x * scale - static_cast<double>(t);
  if (u < 0.0 || u > 1.0) return 0.0;
  const double amp = std::sqrt(scale);
  return u < 0.5 ? amp : -amp;
}

/// In-place orthonormal Haar analysis of finest-level scaling coefficients along one line.
inline void haar_forward_line(std::span<double> v, std::vector<double>& scratch) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  scratch.resize(v.size());
  for (std::size_t len = v.size(); len > 1; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t t = 0; t < half; ++t) {
      const double a = v[2 * t];
      const double b = v[2 * t + 1];
      scratch[t] = (a + b) * inv_sqrt2;
      scratch[half + t] = (a - b) * inv_sqrt2;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(len), v.begin());
  }
}

class HaarTensorBasis {
public:
  HaarTensorBasis(int d, int max_level) : d_(d), max_level_(max_level) {
    if (d < 1) throw domain_error("Haar basis needs d >= 1");
    if (max_level < 0) throw domain_error("Haar basis needs J >= 0");
    if (static_cast<long>(d) * (max_level + 1) > 26) throw domain_error("Haar basis too large (d (J+1) > 26)");
    per_axis_ = std::size_t{1} << (max_level + 1);
    size_ = std::size_t{1} << (d * (max_level + 1));
    std::vector<int> shell(size_);
    for (std::size_t flat = 0; flat < size_; ++flat) {
      int s = -1;
      std::size_t rest = flat;
      for (int a = 0; a < d_; ++a) {
        s = std::max(s, haar_index_1d(static_cast<std::uint32_t>(rest % per_axis_)).level);
        rest /= per_axis_;
      }
      shell[flat] = s;
    }
    order_.resize(size_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t x, std::size_t y) { return shell[x] < shell[y]; });
    position_of_.resize(size_);
    for (std::size_t p = 0; p < size_; ++p) position_of_[order_[p]] = p;
  }

  int dimension() const noexcept { return d_; }
  int max_level() const noexcept { return max_level_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t cells_per_axis() const noexcept { return per_axis_; }
  std::string id() const { return "haar:d=" + std::to_string(d_) + ":J=" + std::to_string(max_level_); }

  /// Number of basis functions with shell <= level (complete through that level).
  std::size_t count_through_level(int level) const noexcept {
    if (level < -1) return 0;
    return std::size_t{1} << (d_ * (std::min(level, max_level_) + 1));
  }

  /// Per-axis 1D indices of a basis position; axis 0 first.
  std::vector<std::uint32_t> axis_indices(std::size_t position) const {
    std::vector<std::uint32_t> out(static_cast<std::size_t>(d_));
    std::size_t flat = order_.at(position);
    for (int a = d_ - 1; a >= 0; --a) {
      out[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(flat % per_axis_);
      flat /= per_axis_;
    }
    return out;
  }

  WaveletIndex index(std::size_t position) const {
    WaveletIndex idx;
    for (auto i : axis_indices(position)) idx.push_back(haar_index_1d(i));
    return idx;
  }

  int shell(std::size_t position) const {
    int s = -1;
    for (const auto& h : index(position)) s = std::max(s, h.level);
    return s;
  }

  double evaluate(std::size_t position, std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(d_)) throw contract_error("point dimension mismatch");
    const auto idx = axis_indices(position);
    double v = 1.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      v *= haar_1d(idx[a], x[a]);
      if (v == 0.0) break;
    }
    return v;
  }

  /// Basis coefficients (in basis order) of the function whose integrals over the finest cells
  /// of side 2^{-(J+1)} are given row-major, axis 0 most significant.
  std::vector<double> transform_cells(std::vector<double> cells) const {
    if (cells.size() != size_) throw contract_error("cell array has wrong size");
    const double scale = std::sqrt(static_cast<double>(per_axis_));
    for (auto& c : cells) c *= std::pow(scale, d_);
    std::vector<double> line(per_axis_), scratch;
    for (int a = 0; a < d_; ++a) {
      std::size_t stride = 1;
      for (int b = a + 1; b < d_; ++b) stride *= per_axis_;
      const std::size_t block = stride * per_axis_;
      for (std::size_t base = 0; base < size_; base += block) {
        for (std::size_t off = 0; off < stride; ++off) {
          for (std::size_t i = 0; i < per_axis_; ++i) line[i] = cells[base + off + i * stride];
          haar_forward_line(line, scratch);
          for (std::size_t i = 0; i < per_axis_; ++i) cells[base + off + i * stride] = line[i];
        }
      }
    }
    std::vector<double> out(size_);
    for (std::size_t p = 0; p < size_; ++p) out[p] = cells[order_[p]];
    return out;
  }

  /// Coefficients from a callable `cell_integral(lo, hi)` giving the integral over a box.
  template <class CellIntegral>
  std::vector<double> coefficients(CellIntegral&& cell_integral) const {
    std::vector<double> cells(size_);
    std::vector<double> lo(static_cast<std::size_t>(d_)), hi(static_cast<std::size_t>(d_));
    const double width = 1.0 / static_cast<double>(per_axis_);
    for (std::size_t flat = 0; flat < size_; ++flat) {
      std::size_t rest = flat;
      for (int a = d_ - 1; a >= 0; --a) {
        const auto i = rest % per_axis_;
        rest /= per_axis_;
        lo[static_cast<std::size_t>(a)] = width * static_cast<double>(i);
        hi[static_cast<std::size_t>(a)] = width * static_cast<double>(i + 1);
      }
      cells[flat] = cell_integral(std::span<const double>(lo), std::span<const double>(hi));
    }
    return transform_cells(std::move(cells));
  }

private:
  int d_;
  int max_level_;
  std::size_t per_axis_ = 0;
  std::size_t size_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_of_;
};

/// Gaussian wavelet series prior: f = sum_{gamma in I} sqrt(lambda_gamma) xi_gamma psi_gamma.
struct WaveletPrior {
  int d = 1;
  int max_level = 0;
  std::vector<std::size_t> index_set;  // basis positions, strictly increasing
  std::vector<double> lambdas;         // parallel to index_set, all > 0
};

/// Sparse coefficient map over basis positions.
using WaveletCoefficients = std::vector<std::pair<std::size_t, double>>;

inline WaveletPrior make_wavelet_prior(const HaarTensorBasis& basis, std::vector<std::size_t> index_set,
                                       std::vector<double> lambdas) {
  if (index_set.size() != lambdas.size()) throw contract_error("index set and variances differ in length");
  for (std::size_t i = 0; i < index_set.size(); ++i) {
    if (index_set[i] >= basis.size()) throw contract_error("wavelet index outside the basis");
    if (i > 0 && index_set[i] <= index_set[i - 1]) throw contract_error("index set must be strictly increasing");
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) throw domain_error("wavelet prior variances must be > 0");
  }
  return {basis.dimension(), basis.max_level(), std::move(index_set), std::move(lambdas)};
}

/// Prior over every basis position with the variances of `spectrum` (which must be positive).
inline WaveletPrior wavelet_prior_from_spectrum(const HaarTensorBasis& basis, const Spectrum& spectrum) {
  if (spectrum.basis_id != basis.id()) throw contract_error("spectrum is not on this Haar basis");
  std::vector<std::size_t> idx(spectrum.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_wavelet_prior(basis, std::move(idx), spectrum.eigenvalues);
}

/// The prior viewed as a spectrum over the full basis; positions outside I get variance 0.
inline Spectrum to_spectrum(const HaarTensorBasis& basis, const WaveletPrior& prior) {
  if (prior.d != basis.dimension() || prior.max_level != basis.max_level())
    throw contract_error("prior and basis disagree on d or J");
  std::vector<double> lambda(basis.size(), 0.0);
  for (std::size_t i = 0; i < prior.index_set.size(); ++i) lambda[prior.index_set[i]] = prior.lambdas[i];
  return make_spectrum(std::move(lambda), basis.id());
}

template <class Rng>
WaveletCoefficients sample_wavelet_prior(const WaveletPrior& prior, Rng& rng) {
  std::normal_distribution<double> normal;
  WaveletCoefficients out;
  out.reserve(prior.index_set.size());
  for (std::size_t i = 0; i < prior.index_set.size(); ++i)
    out.emplace_back(prior.index_set[i], std::sqrt(prior.lambdas[i]) * normal(rng));
  return out;
}

/// sum_gamma <f, psi_gamma>^2 ^ (1/n).
inline double ilb_risk_bound(std::span<const double> coefficients, double n) {
  if (!(n > 0.0)) throw domain_error("n must be positive");
  const double inv_n = 1.0 / n;
  double total = 0.0;
  for (double c : coefficients) total += std::min(c * c, inv_n);
  return total;
}

inline double ilb_risk_bound(const WaveletCoefficients& coefficients, double n) {
  std::vector<double> values;
  values.reserve(coefficients.size());
  for (const auto& [pos, c] : coefficients) values.push_back(c);
  return ilb_risk_bound(values, n);
}

/// sum_gamma theta^2 / (1 + n theta^2): the smallest risk any prior on this basis can reach.
inline double ilb_bayes_floor(std::span<const double> coefficients, double n) {
  if (!(n > 0.0)) throw domain_error("n must be positive");
  double total = 0.0;
  for (double c : coefficients) total += c * c / (1.0 + n * c * c);
  return total;
}

/// n^{-1/(2+d)}; the constant in front is basis dependent and not supplied.
inline double theorem3_rate(int d, double n) {
  if (d < 1 || !(n >= 1.0)) throw domain_error("theorem3_rate needs d >= 1 and n >= 1");
  return std::pow(n, -1.0 / (2.0 + d));
}

/// Rate exponent 1/(2+d) of the wavelet-prior bound.
inline double wavelet_rate_exponent(int d) { return 1.0 / (2.0 + d); }

/// g(x) = dist(x_1 + ... + x_d, 2^{-j} Z): a generalized additive member of the Lipschitz class
/// with sup-norm 2^{-j-1}, oscillating at wavelet level j.
struct SawtoothSurrogate {
  int d = 1;
  int j = 0;

  double period() const noexcept { return std::ldexp(1.0, -j); }

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (double v : x) s += v;
    const double p = period();
    const double r = s - p * std::floor(s / p);
    return std::min(r, p - r);
  }

  PiecewiseLinear profile() const { return sawtooth_profile(period(), static_cast<double>(d)); }
};

inline std::vector<double> haar_coefficients(const HaarTensorBasis& basis, const SawtoothSurrogate& g) {
  if (g.d != basis.dimension()) throw contract_error("surrogate and basis dimensions differ");
  const PiecewiseLinear F = g.profile();
  return basis.coefficients([&](std::span<const double> lo, std::span<const double> hi) {
    return box_ridge_integral(F, lo, hi);
  });
}

/// Level j_n with 2^{-j (2+d)} closest to 1/n from above (coefficients of size ~ n^{-1/2}).
inline int surrogate_level(int d, double n) {
  if (!(n >= 1.0)) throw domain_error("n must be >= 1");
  return std::max(0, static_cast<int>(std::floor(std::log2(n) / (2.0 + d))));
}

}  // namespace gplb
