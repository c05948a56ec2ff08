#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include "gplb/cosine_basis.hpp"
#include "gplb/errors.hpp"
#include "gplb/wavelet.hpp"

namespace gplb {

using Basis = std::variant<HaarTensorBasis, CosineTensorBasis>;

inline std::string basis_id(const Basis& b) {
  return std::visit([](const auto& x) { return x.id(); }, b);
}
inline std::size_t basis_size(const Basis& b) {
  return std::visit([](const auto& x) { return x.size(); }, b);
}
inline int basis_dimension(const Basis& b) {
  return std::visit([](const auto& x) { return x.dimension(); }, b);
}
inline int basis_level(const Basis& b) {
  return std::visit([](const auto& x) { return x.max_level(); }, b);
}
inline double basis_evaluate(const Basis& b, std::size_t position, std::span<const double> x) {
  return std::visit([&](const auto& v) { return v.evaluate(position, x); }, b);
}

/// "haar" or "cosine".
inline Basis make_basis(const std::string& kind, int d, int level) {
  if (kind == "haar") return HaarTensorBasis(d, level);
  if (kind == "cosine") return CosineTensorBasis(d, level);
  throw config_error("unknown basis kind '" + kind + "' (expected haar or cosine)");
}

}  // namespace gplb
