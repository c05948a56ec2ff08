#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gplb/errors.hpp"

namespace gplb {

/// Tensor cosine basis on [0,1]^d: c_0 = 1, c_k(x) = sqrt(2) cos(pi k x), frequencies
/// k < 2^{J+1} per axis. Ordered by the largest per-axis frequency, then row-major.
class CosineTensorBasis {
public:
  CosineTensorBasis(int d, int max_level) : d_(d), max_level_(max_level) {
    if (d < 1 || max_level < 0) throw domain_error("cosine basis needs d >= 1 and J >= 0");
    if (static_cast<long>(d) * (max_level + 1) > 24) throw domain_error("cosine basis too large");
    per_axis_ = std::size_t{1} << (max_level + 1);
    size_ = std::size_t{1} << (d * (max_level + 1));
    std::vector<std::size_t> shell(size_);
    for (std::size_t flat = 0; flat < size_; ++flat) {
      std::size_t s = 0, rest = flat;
      for (int a = 0; a < d_; ++a) {
        s = std::max(s, rest % per_axis_);
        rest /= per_axis_;
      }
      shell[flat] = s;
    }
    order_.resize(size_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t x, std::size_t y) { return shell[x] < shell[y]; });
  }

  int dimension() const noexcept { return d_; }
  int max_level() const noexcept { return max_level_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t frequencies_per_axis() const noexcept { return per_axis_; }
  std::string id() const { return "cosine:d=" + std::to_string(d_) + ":J=" + std::to_string(max_level_); }

  static double axis_function(std::uint32_t k, double x) noexcept {
    if (k == 0) return 1.0;
    return std::numbers::sqrt2 * std::cos(std::numbers::pi * static_cast<double>(k) * x);
  }

  std::vector<std::uint32_t> frequencies(std::size_t position) const {
    std::vector<std::uint32_t> out(static_cast<std::size_t>(d_));
    std::size_t flat = order_.at(position);
    for (int a = d_ - 1; a >= 0; --a) {
      out[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(flat % per_axis_);
      flat /= per_axis_;
    }
    return out;
  }

  double evaluate(std::size_t position, std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(d_)) throw contract_error("point dimension mismatch");
    const auto freq = frequencies(position);
    double v = 1.0;
    for (std::size_t a = 0; a < freq.size(); ++a) v *= axis_function(freq[a], x[a]);
    return v;
  }

private:
  int d_;
  int max_level_;
  std::size_t per_axis_ = 0;
  std::size_t size_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace gplb
