#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gplb/errors.hpp"

namespace gplb {

/// Continuous piecewise-linear function of one variable, written as
///   F(t) = value0 + slope0 (t - origin) + sum_i jumps[i] (t - knots[i])_+
/// with knots sorted ascending and all knots >= origin. Only t >= origin is meaningful.
class PiecewiseLinear {
public:
  PiecewiseLinear(double origin, double value0, double slope0, std::vector<double> knots,
                  std::vector<double> jumps)
      : origin_(origin), value0_(value0), slope0_(slope0), knots_(std::move(knots)), jumps_(std::move(jumps)) {
    if (knots_.size() != jumps_.size()) throw contract_error("knots and jumps differ in length");
    if (!std::is_sorted(knots_.begin(), knots_.end())) throw contract_error("knots must be sorted");
  }

  double origin() const noexcept { return origin_; }
  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const double> jumps() const noexcept { return jumps_; }

  /// Value and right slope at t, found by walking the knots up to t.
  std::pair<double, double> value_and_slope(double t) const noexcept {
    double value = value0_;
    double slope = slope0_;
    double at = origin_;
    for (std::size_t i = 0; i < knots_.size() && knots_[i] <= t; ++i) {
      value += slope * (knots_[i] - at);
      at = knots_[i];
      slope += jumps_[i];
    }
    return {value + slope * (t - at), slope};
  }

  double operator()(double t) const noexcept { return value_and_slope(t).first; }

private:
  double origin_;
  double value0_;
  double slope0_;
  std::vector<double> knots_;
  std::vector<double> jumps_;
};

/// (h - t)_+ on t >= 0.
inline PiecewiseLinear hat_profile(double h) { return PiecewiseLinear(0.0, h, -1.0, {h}, {1.0}); }

/// dist(t, period * Z) on t in [0, upper].
inline PiecewiseLinear sawtooth_profile(double period, double upper) {
  std::vector<double> knots, jumps;
  const double half = 0.5 * period;
  for (std::size_t i = 1;; ++i) {
    const double t = half * static_cast<double>(i);
    if (t > upper + half) break;
    knots.push_back(t);
    jumps.push_back(i % 2 == 1 ? -2.0 : 2.0);
  }
  return PiecewiseLinear(0.0, 0.0, 1.0, std::move(knots), std::move(jumps));
}

/// Exact integral of F(u_1 + ... + u_d) over the box prod_i [lo_i, hi_i].
///
/// With G a d-fold antiderivative of F, inclusion-exclusion over the 2^d corners gives
///   int_box F(sum u) du = sum_{eps in {0,1}^d} (-1)^{d - |eps|} G(sum_i corner_i(eps)).
/// G is expanded around s_lo = sum lo_i using only the knots inside the box's range of sums,
/// which keeps the terms on the scale of the box and limits cancellation.
inline double box_ridge_integral(const PiecewiseLinear& F, std::span<const double> lo,
                                 std::span<const double> hi) {
  const std::size_t d = lo.size();
  if (hi.size() != d || d == 0) throw contract_error("box dimensions disagree");
  double s_lo = 0.0, s_hi = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(hi[i] >= lo[i])) throw contract_error("box with hi < lo");
    if (hi[i] == lo[i]) return 0.0;
    s_lo += lo[i];
    s_hi += hi[i];
  }
  const auto [alpha, beta] = F.value_and_slope(s_lo);
  std::vector<double> local_knots, local_jumps;
  for (std::size_t i = 0; i < F.knots().size(); ++i) {
    const double kn = F.knots()[i];
    if (kn > s_lo && kn < s_hi) {
      local_knots.push_back(kn);
      local_jumps.push_back(F.jumps()[i]);
    }
  }
  double fact_d = 1.0;
  for (std::size_t i = 2; i <= d; ++i) fact_d *= static_cast<double>(i);
  const double fact_d1 = fact_d * static_cast<double>(d + 1);
  const int pd = static_cast<int>(d);
  auto antiderivative = [&](double t) {
    const double x = t - s_lo;
    double g = alpha * std::pow(x, pd) / fact_d + beta * std::pow(x, pd + 1) / fact_d1;
    for (std::size_t i = 0; i < local_knots.size(); ++i) {
      const double r = t - local_knots[i];
      if (r > 0.0) g += local_jumps[i] * std::pow(r, pd + 1) / fact_d1;
    }
    return g;
  };
  double total = 0.0;
  const std::size_t corners = std::size_t{1} << d;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    double s = 0.0;
    std::size_t ups = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (std::size_t{1} << i)) {
        s += hi[i];
        ++ups;
      } else {
        s += lo[i];
      }
    }
    const double sign = ((d - ups) % 2 == 0) ? 1.0 : -1.0;
    total += sign * antiderivative(s);
  }
  return total;
}

/// 8-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre8 {
  static constexpr std::array<double, 8> nodes{
      -0.9602898564975362316835609, -0.7966664774136267395915539, -0.5255324099163289858177390,
      -0.1834346424956498049394761, 0.1834346424956498049394761,  0.5255324099163289858177390,
      0.7966664774136267395915539,  0.9602898564975362316835609};
  static constexpr std::array<double, 8> weights{
      0.1012285362903762591525314, 0.2223810344533744705443560, 0.3137066458778872873379622,
      0.3626837833783619829651504, 0.3626837833783619829651504, 0.3137066458778872873379622,
      0.2223810344533744705443560, 0.1012285362903762591525314};
};

/// Composite 8-point Gauss-Legendre over [a, b] with `panels` equal panels.
template <class Fn>
double gauss_legendre(Fn&& f, double a, double b, std::size_t panels) {
  if (b <= a) return 0.0;
  const double width = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double left = a + width * static_cast<double>(p);
    const double mid = left + 0.5 * width;
    double panel = 0.0;
    for (std::size_t q = 0; q < 8; ++q)
      panel += GaussLegendre8::weights[q] * f(mid + 0.5 * width * GaussLegendre8::nodes[q]);
    total += 0.5 * width * panel;
  }
  return total;
}

}  // namespace gplb
