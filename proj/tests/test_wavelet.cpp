#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "gplb/adversarial.hpp"
#include "gplb/random.hpp"
#include "gplb/wavelet.hpp"

using namespace gplb;

namespace {

// Values of basis function p at the finest-cell midpoints (the function is constant on each cell).
std::vector<double> cell_values(const HaarTensorBasis& basis, std::size_t p) {
  const int d = basis.dimension();
  const std::size_t per_axis = basis.cells_per_axis();
  std::vector<double> out(basis.size()), x(static_cast<std::size_t>(d));
  for (std::size_t flat = 0; flat < basis.size(); ++flat) {
    std::size_t rest = flat;
    for (int a = d - 1; a >= 0; --a) {
      x[static_cast<std::size_t>(a)] = (static_cast<double>(rest % per_axis) + 0.5) / static_cast<double>(per_axis);
      rest /= per_axis;
    }
    out[flat] = basis.evaluate(p, x);
  }
  return out;
}

double cell_inner(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s / static_cast<double>(u.size());
}

}  // namespace

TEST(HaarTensorBasis, LevelZeroInOneDimension) {
  const HaarTensorBasis basis(1, 0);
  ASSERT_EQ(basis.size(), 2u);
  const double left[1] = {0.25}, right[1] = {0.75};
  EXPECT_EQ(basis.evaluate(0, left), 1.0);
  EXPECT_EQ(basis.evaluate(0, right), 1.0);
  EXPECT_EQ(basis.evaluate(1, left), 1.0);
  EXPECT_EQ(basis.evaluate(1, right), -1.0);
  const auto u = cell_values(basis, 0), v = cell_values(basis, 1);
  EXPECT_EQ(cell_inner(u, v), 0.0);
  EXPECT_EQ(cell_inner(u, u), 1.0);
  EXPECT_EQ(cell_inner(v, v), 1.0);
}

TEST(HaarTensorBasis, CountThroughLevel) {
  for (int J = 0; J <= 10; ++J) {
    const HaarTensorBasis basis(1, J);
    EXPECT_EQ(basis.size(), std::size_t{1} << (J + 1));
    EXPECT_EQ(basis.count_through_level(J), basis.size());
  }
  const HaarTensorBasis b2(2, 3);
  EXPECT_EQ(b2.count_through_level(-1), 1u);
  EXPECT_EQ(b2.count_through_level(0), 4u);
  EXPECT_EQ(b2.count_through_level(1), 16u);
  EXPECT_EQ(b2.count_through_level(-2), 0u);
}

TEST(HaarTensorBasis, OrderingIsByShell) {
  const HaarTensorBasis basis(2, 3);
  for (std::size_t p = 0; p < basis.size(); ++p) {
    const int s = basis.shell(p);
    EXPECT_LT(p, basis.count_through_level(s));
    EXPECT_GE(p, basis.count_through_level(s - 1));
  }
}

TEST(HaarTensorBasis, IndicesAreValidAndDistinct) {
  const HaarTensorBasis basis(3, 2);
  std::set<std::vector<std::uint32_t>> seen;
  for (std::size_t p = 0; p < basis.size(); ++p) {
    const auto idx = basis.index(p);
    for (const auto& h : idx) {
      EXPECT_GE(h.level, -1);
      EXPECT_LE(h.level, 2);
      if (h.level < 0) EXPECT_EQ(h.translate, 0u);
      else EXPECT_LT(h.translate, 1u << h.level);
    }
    EXPECT_TRUE(seen.insert(basis.axis_indices(p)).second);
  }
}

TEST(HaarTensorBasis, GramIsIdentityForSmallBases) {
  for (int d = 1; d <= 3; ++d) {
    for (int J = 0; J <= 5; ++J) {
      if (static_cast<std::size_t>(1) << (d * (J + 1)) > 1024) continue;
      const HaarTensorBasis basis(d, J);
      Eigen::MatrixXd F(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
      for (std::size_t p = 0; p < basis.size(); ++p) {
        const auto v = cell_values(basis, p);
        for (std::size_t c = 0; c < v.size(); ++c) F(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = v[c];
      }
      const Eigen::MatrixXd G = F * F.transpose() / static_cast<double>(basis.size());
      EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-12) << d << " " << J;
    }
  }
}

TEST(HaarTensorBasis, OrthonormalityOnLargeBasesBySampledPairs) {
  Engine rng = make_engine(21);
  for (int d = 1; d <= 3; ++d) {
    const int J = 5;
    const HaarTensorBasis basis(d, J);
    std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
    for (int t = 0; t < 30; ++t) {
      const std::size_t p = pick(rng), q = t % 3 == 0 ? p : pick(rng);
      const double g = cell_inner(cell_values(basis, p), cell_values(basis, q));
      EXPECT_NEAR(g, p == q ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(HaarTensorBasis, TransformOfABasisFunctionIsAUnitVector) {
  Engine rng = make_engine(22);
  for (int d = 1; d <= 3; ++d) {
    const HaarTensorBasis basis(d, 5);
    std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
    for (int t = 0; t < 5; ++t) {
      const std::size_t p = pick(rng);
      auto cells = cell_values(basis, p);
      for (auto& v : cells) v /= static_cast<double>(basis.size());
      const auto coef = basis.transform_cells(std::move(cells));
      for (std::size_t q = 0; q < coef.size(); ++q) ASSERT_NEAR(coef[q], q == p ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(HaarTensorBasis, ParsevalForDyadicStepFunctions) {
  Engine rng = make_engine(23);
  std::normal_distribution<double> normal;
  for (int d = 1; d <= 3; ++d) {
    const HaarTensorBasis basis(d, d == 3 ? 3 : 4);
    std::vector<double> values(basis.size());
    for (auto& v : values) v = normal(rng);
    double norm = 0.0;
    for (double v : values) norm += v * v;
    norm /= static_cast<double>(values.size());
    std::vector<double> cells = values;
    for (auto& v : cells) v /= static_cast<double>(basis.size());
    const auto coef = basis.transform_cells(cells);
    double sum = 0.0;
    for (double c : coef) sum += c * c;
    EXPECT_NEAR(sum, norm, 1e-12 * norm);
  }
}

TEST(HaarTensorBasis, RejectsBadParameters) {
  EXPECT_THROW(HaarTensorBasis(0, 2), domain_error);
  EXPECT_THROW(HaarTensorBasis(1, -1), domain_error);
  EXPECT_THROW(HaarTensorBasis(3, 9), domain_error);
}

TEST(WaveletPrior, EmpiricalVarianceMatches) {
  const HaarTensorBasis basis(2, 1);
  const auto prior = make_wavelet_prior(basis, {0, 3, 7, 15}, {1.0, 0.25, 1e-3, 4.0});
  Engine rng = make_engine(30);
  std::vector<RunningStats> stats(4);
  for (int r = 0; r < 10000; ++r) {
    const auto draw = sample_wavelet_prior(prior, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(draw[i].first, prior.index_set[i]);
      stats[i].push(draw[i].second);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(stats[i].variance(), prior.lambdas[i], 0.05 * prior.lambdas[i]);
}

TEST(WaveletPrior, TinyVarianceGivesTinyCoefficients) {
  const HaarTensorBasis basis(1, 2);
  const double eps = 1e-12;
  const auto prior = make_wavelet_prior(basis, {1, 2}, {eps, eps});
  Engine rng = make_engine(31);
  for (int r = 0; r < 100; ++r)
    for (const auto& [pos, c] : sample_wavelet_prior(prior, rng)) EXPECT_LT(std::abs(c), 7.0 * std::sqrt(eps));
}

TEST(WaveletPrior, FixedSeedDeterminism) {
  const HaarTensorBasis basis(1, 3);
  const auto prior = make_wavelet_prior(basis, {0, 1, 5}, {1.0, 2.0, 3.0});
  Engine a = make_engine(77), b = make_engine(77);
  EXPECT_EQ(sample_wavelet_prior(prior, a), sample_wavelet_prior(prior, b));
}

TEST(WaveletPrior, InvariantsEnforced) {
  const HaarTensorBasis basis(1, 2);
  EXPECT_THROW(make_wavelet_prior(basis, {0, 1}, {1.0, 0.0}), domain_error);
  EXPECT_THROW(make_wavelet_prior(basis, {1, 0}, {1.0, 1.0}), contract_error);
  EXPECT_THROW(make_wavelet_prior(basis, {8}, {1.0}), contract_error);
  EXPECT_THROW(make_wavelet_prior(basis, {0}, {1.0, 2.0}), contract_error);
}

TEST(WaveletPrior, SpectrumRoundTrip) {
  const HaarTensorBasis basis(1, 2);
  const auto prior = make_wavelet_prior(basis, {0, 2, 5}, {1.0, 0.5, 0.25});
  const auto s = to_spectrum(basis, prior);
  ASSERT_EQ(s.size(), basis.size());
  EXPECT_EQ(s.eigenvalues[2], 0.5);
  EXPECT_EQ(s.eigenvalues[1], 0.0);
  const auto full = wavelet_prior_from_spectrum(basis, flat_spectrum(basis.size(), 2.0, basis.id()));
  EXPECT_EQ(full.index_set.size(), basis.size());
  EXPECT_THROW(wavelet_prior_from_spectrum(basis, flat_spectrum(basis.size(), 2.0, "other")), contract_error);
}

TEST(IlbRiskBound, SingleScaledBasisFunction) {
  for (double t : {1e-3, 0.01, 0.5}) {
    const std::vector<double> theta{0.0, t, 0.0};
    EXPECT_DOUBLE_EQ(ilb_risk_bound(theta, 1e3), std::min(t * t, 1e-3));
  }
}

TEST(IlbRiskBound, SaturationCount) {
  const double n = 500.0;
  WaveletCoefficients f{{0, 0.1}, {3, -0.2}, {4, 0.05}, {9, 0.0}};
  EXPECT_NEAR(ilb_risk_bound(f, n), 3.0 / n, 1e-15);
}

TEST(IlbRiskBound, PyramidBelowExactRiskForRandomSpectra) {
  const HaarTensorBasis basis(1, 6);
  const auto C = compute_coefficients(build_pyramid_family(1, 1), basis, basis.size());
  const std::vector<double> theta(C.entries.row(0).begin(), C.entries.row(0).end());
  const TruthCoefficients truth{theta, basis.id(), 0.0};
  const double n = 1e3;
  Engine rng = make_engine(40);
  const double bound = ilb_risk_bound(theta, n);
  EXPECT_GT(bound, 0.0);
  for (int t = 0; t < 50; ++t) {
    const double risk = exact_risk(random_spectrum(basis.size(), basis.id(), rng), truth, n);
    EXPECT_GE(risk, ilb_bayes_floor(theta, n) - 1e-12);
    EXPECT_GE(risk, 0.5 * bound - 1e-12);
  }
}

TEST(IlbBayesFloor, AttainedByMatchedPriorAndWithinFactorTwo) {
  const HaarTensorBasis basis(2, 3);
  const auto theta = haar_coefficients(basis, SawtoothSurrogate{2, 1});
  std::vector<double> squares;
  for (double c : theta) squares.push_back(c * c);
  const double n = 1e4;
  const TruthCoefficients truth{theta, basis.id(), 0.0};
  const double floor = ilb_bayes_floor(theta, n);
  EXPECT_NEAR(exact_risk(matched_spectrum(squares, basis.id()), truth, n), floor, 1e-12 * floor);
  EXPECT_LE(floor, ilb_risk_bound(theta, n));
  EXPECT_GE(floor, 0.5 * ilb_risk_bound(theta, n));
}

TEST(WaveletRate, Examples) {
  EXPECT_NEAR(theorem3_rate(1, 1e3), 0.1, 1e-15);
  for (int d = 1; d <= 10; ++d) EXPECT_LT(wavelet_rate_exponent(d), theorem_constants(d).rate_exponent);
  EXPECT_LT(wavelet_rate_exponent(1000), 1e-3);
  for (int d = 1; d < 50; ++d) EXPECT_GT(wavelet_rate_exponent(d), wavelet_rate_exponent(d + 1));
  EXPECT_THROW(theorem3_rate(0, 10.0), domain_error);
  EXPECT_THROW(theorem3_rate(1, 0.5), domain_error);
}

TEST(SawtoothSurrogate, LipschitzSupNormAndCoefficients) {
  for (int d = 1; d <= 3; ++d) {
    const SawtoothSurrogate g{d, 2};
    Engine rng = make_engine(50);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int t = 0; t < 500; ++t) {
      for (auto& v : x) v = unit(rng);
      const double v = g(x);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 0.5 * g.period() + 1e-15);
      auto y = x;
      y[0] = std::min(1.0, y[0] + 1e-6);
      if (y[0] > x[0]) {
        EXPECT_LE(std::abs(g(y) - v) / (y[0] - x[0]), 1.0 + 1e-8);
      }
    }
    // Parseval against a fine Riemann sum of g^2.
    const HaarTensorBasis basis(d, d == 3 ? 3 : 5);
    const auto coef = haar_coefficients(basis, g);
    double energy = 0.0;
    for (double c : coef) energy += c * c;
    EXPECT_GT(energy, 0.0);
    EXPECT_LE(energy, g.period() * g.period() / 4.0);
    EXPECT_NEAR(coef[0], g.period() / 4.0, 1e-12);
  }
}

TEST(SurrogateLevel, Values) {
  EXPECT_EQ(surrogate_level(1, 1e3), 3);
  EXPECT_EQ(surrogate_level(2, 1.0), 0);
  EXPECT_GE(std::ldexp(1.0, -surrogate_level(1, 1e6) * 3), 1e-6);
}
