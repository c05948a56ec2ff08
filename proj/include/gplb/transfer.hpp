#pragma once

// Transfer inequalities between posterior-mean risk and posterior contraction.

#include <cmath>

#include "gplb/adversarial.hpp"
#include "gplb/errors.hpp"

namespace gplb {

/// 4 exp(-n mu^2 / 32): bound on P(||posterior mean - f0||^2 <= mu^2 / 4) when mu^2 is the risk.
inline double concentration_bound(double n, double mu_sq) {
  if (!(n > 0.0) || !(mu_sq > 0.0)) throw domain_error("concentration_bound needs n > 0 and mu^2 > 0");
  return 4.0 * std::exp(-n * mu_sq / 32.0);
}

/// 2 sqrt(v): bound on P(||posterior mean - f0|| >= 2 gamma) given E Pi(||f - f0|| >= gamma | Y) = v.
inline double anderson_transfer(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw domain_error("anderson_transfer needs v in [0, 1]");
  return 2.0 * std::sqrt(v);
}

}  // namespace gplb
