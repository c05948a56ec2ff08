#pragma once

// Independent numerical oracles used by the verification suite: adaptive Gauss-Kronrod
// cubature, tensor Gauss-Legendre Gram matrices and finite-difference Lipschitz checks.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gplb/adversarial.hpp"
#include "gplb/quadrature.hpp"

namespace gplb {

using PointFunction = std::function<double(std::span<const double>)>;
// Extra breakpoints for axis `axis` given the coordinates already fixed in x[0..axis).
using AxisBreaks = std::function<std::vector<double>(int axis, std::span<const double> prefix)>;

/// Nested adaptive 15-point Gauss-Kronrod over [0,1]^d. Each axis is split at `breaks`
/// and, when given, at the points returned by `moving` for the current outer coordinates.
inline double adaptive_cube_integral(const PointFunction& f, int d, const std::vector<double>& breaks,
                                     double tol = 1e-12, const AxisBreaks& moving = {},
                                     unsigned max_depth = 12) {
  std::vector<double> x(static_cast<std::size_t>(d));
  std::function<double(int)> level = [&](int axis) -> double {
    if (axis == d) return f(x);
    std::vector<double> pts{0.0, 1.0};
    pts.insert(pts.end(), breaks.begin(), breaks.end());
    if (moving) {
      const auto extra = moving(axis, std::span<const double>(x.data(), static_cast<std::size_t>(axis)));
      pts.insert(pts.end(), extra.begin(), extra.end());
    }
    std::erase_if(pts, [](double b) { return !(b >= 0.0 && b <= 1.0); });
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
      auto inner = [&](double t) {
        x[static_cast<std::size_t>(axis)] = t;
        return level(axis + 1);
      };
      total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(inner, pts[p], pts[p + 1], max_depth, tol);
    }
    return total;
  };
  return level(0);
}

/// Kink locations of the l1 pyramid j along `axis` once the earlier coordinates are fixed.
inline AxisBreaks pyramid_kinks(const PyramidFamily& fam, std::size_t j) {
  return [c = fam.center(j), h = fam.bandwidth](int axis, std::span<const double> prefix) {
    double r = h;
    for (std::size_t b = 0; b < prefix.size(); ++b) r -= std::abs(prefix[b] - c[b]);
    const double ca = c[static_cast<std::size_t>(axis)];
    std::vector<double> out{ca};
    if (r > 0.0) {
      out.push_back(ca - r);
      out.push_back(ca + r);
    }
    return out;
  };
}

/// Gram matrix of the family by tensor 8-point Gauss-Legendre on cells of side 1/(2k).
inline Eigen::MatrixXd pyramid_gram(const PyramidFamily& fam) {
  const std::size_t per_axis_cells = static_cast<std::size_t>(2 * fam.k);
  const double width = 1.0 / static_cast<double>(per_axis_cells);
  std::vector<double> nodes, weights;
  for (std::size_t c = 0; c < per_axis_cells; ++c) {
    const double mid = (static_cast<double>(c) + 0.5) * width;
    for (std::size_t q = 0; q < 8; ++q) {
      nodes.push_back(mid + 0.5 * width * GaussLegendre8::nodes[q]);
      weights.push_back(0.5 * width * GaussLegendre8::weights[q]);
    }
  }
  const std::size_t P1 = nodes.size();
  std::size_t P = 1;
  for (int a = 0; a < fam.d; ++a) P *= P1;
  Eigen::MatrixXd F(static_cast<Eigen::Index>(fam.m), static_cast<Eigen::Index>(P));
  Eigen::VectorXd w(static_cast<Eigen::Index>(P));
  std::vector<double> x(static_cast<std::size_t>(fam.d));
  for (std::size_t p = 0; p < P; ++p) {
    std::size_t rest = p;
    double weight = 1.0;
    for (int a = fam.d - 1; a >= 0; --a) {
      const std::size_t i = rest % P1;
      rest /= P1;
      x[static_cast<std::size_t>(a)] = nodes[i];
      weight *= weights[i];
    }
    w(static_cast<Eigen::Index>(p)) = weight;
    for (std::size_t j = 0; j < fam.m; ++j)
      F(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = evaluate_pyramid(fam, j, x);
  }
  return F * w.asDiagonal() * F.transpose();
}

struct MembershipCheck {
  double max_lipschitz = 0.0;  // largest finite-difference slope along any axis
  double sup_norm = 0.0;
  bool ok = false;
};

/// Lipschitz constant <= 1 per coordinate and sup-norm <= 1 on a lattice of spacing 1/(2k r).
inline MembershipCheck check_membership(const PyramidFamily& fam, std::size_t refine, double slack = 1e-8) {
  const std::size_t per_axis = static_cast<std::size_t>(2 * fam.k) * refine + 1;
  std::size_t P = 1;
  for (int a = 0; a < fam.d; ++a) P *= per_axis;
  const double step = 1.0 / static_cast<double>(per_axis - 1);
  const double delta = 1e-6;
  MembershipCheck out;
  std::vector<double> x(static_cast<std::size_t>(fam.d)), y;
  for (std::size_t p = 0; p < P; ++p) {
    std::size_t rest = p;
    for (int a = fam.d - 1; a >= 0; --a) {
      x[static_cast<std::size_t>(a)] = step * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
    for (std::size_t j = 0; j < fam.m; ++j) {
      const double v = evaluate_pyramid(fam, j, x);
      out.sup_norm = std::max(out.sup_norm, std::abs(v));
      for (int a = 0; a < fam.d; ++a) {
        y = x;
        auto& coord = y[static_cast<std::size_t>(a)];
        coord += coord + delta <= 1.0 ? delta : -delta;
        const double h = coord - x[static_cast<std::size_t>(a)];
        out.max_lipschitz = std::max(out.max_lipschitz, std::abs(evaluate_pyramid(fam, j, y) - v) / std::abs(h));
      }
    }
  }
  out.ok = out.max_lipschitz <= 1.0 + slack && out.sup_norm <= 1.0 + slack;
  return out;
}

}  // namespace gplb
