#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "heatscope/rng.hpp"
#include "heatscope/spectral.hpp"

using namespace heatscope;

namespace {

// Exact sup |c|_2 over the polytope {|Ec|_inf <= 1}, attained at a vertex:
// every choice of N rows and signs whose solve is feasible.
double polytope_oracle(const Eigen::MatrixXd& E) {
  const int m = static_cast<int>(E.rows()), N = static_cast<int>(E.cols());
  double best = 0;
  std::vector<int> idx(static_cast<std::size_t>(N));
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == N) {
      Eigen::MatrixXd A(N, N);
      for (int r = 0; r < N; ++r) A.row(r) = E.row(idx[static_cast<std::size_t>(r)]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < N) return;
      for (int signs = 0; signs < (1 << N); ++signs) {
        Eigen::VectorXd b(N);
        for (int r = 0; r < N; ++r) b(r) = (signs >> r & 1) ? 1.0 : -1.0;
        const Eigen::VectorXd c = lu.solve(b);
        if ((E * c).cwiseAbs().maxCoeff() <= 1 + 1e-9) best = std::max(best, c.norm());
      }
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[static_cast<std::size_t>(pos)] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(EvalMatrix, MatchesEvalMode) {
  const SpectrumSlice s = enumerate_modes(2, 20, 1);
  const PointSet om = generate(make_generator(gen::UniformGrid{{3, 4}}));
  const EvalMatrix E = eval_matrix(s, om);
  ASSERT_EQ(E.rows(), 12);
  ASSERT_EQ(static_cast<std::size_t>(E.cols()), s.size());
  for (Eigen::Index i = 0; i < E.rows(); ++i)
    for (Eigen::Index j = 0; j < E.cols(); ++j) {
      const auto& p = om.points[static_cast<std::size_t>(i)];
      const auto& k = s.modes[static_cast<std::size_t>(j)].index.k;
      EXPECT_NEAR(E(i, j), 2 * std::sin(kPi * k[0] * p[0]) * std::sin(kPi * k[1] * p[1]), 1e-14);
    }
  EXPECT_THROW(eval_matrix(enumerate_modes(1, 4, 1), om), ContractError);
}

TEST(SpectralConstant, SinglePointSingleMode) {
  const SpectralConstant c = spectral_constant(enumerate_modes(1, 1, 1), points_1d(std::vector<double>{0.5}));
  EXPECT_EQ(c.status, SpectralStatus::finite);
  EXPECT_NEAR(c.lower, 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(c.upper, 1 / std::sqrt(2.0), 1e-14);
}

TEST(SpectralConstant, UnderdeterminedIsNullspace) {
  const SpectralConstant c = spectral_constant(enumerate_modes(1, 4, 1), points_1d(std::vector<double>{0.3}));
  EXPECT_EQ(c.status, SpectralStatus::infinite_nullspace);
  EXPECT_TRUE(std::isinf(c.upper));
}

TEST(SpectralConstant, NodalPointIsNullspace) {
  const SpectrumSlice s = make_slice(1, {MultiIndex{{2}}}, 1);
  const SpectralConstant c = spectral_constant(s, points_1d(std::vector<double>{0.5}));
  EXPECT_EQ(c.status, SpectralStatus::infinite_nullspace);
}

TEST(SpectralConstant, BracketAgainstPolytopeOracle) {
  Rng rng(13);
  for (int t = 0; t < 25; ++t) {
    const int m = static_cast<int>(rng.uniform_int(3, 7));
    std::vector<double> x;
    for (int i = 0; i < m; ++i) x.push_back(rng.uniform(0.02, 0.98));
    const PointSet om = points_1d(x);
    const double cutoff = static_cast<double>(rng.uniform_int(1, 3) * rng.uniform_int(1, 3));
    const SpectrumSlice s = enumerate_modes(1, cutoff, 1);
    const SpectralConstant c = spectral_constant(s, om);
    ASSERT_EQ(c.status, SpectralStatus::finite);
    const double truth = polytope_oracle(eval_matrix(s, om));
    EXPECT_LE(c.lower, truth * (1 + 1e-9));
    EXPECT_GE(c.upper, truth * (1 - 1e-9));
    EXPECT_GE(c.lower, truth * 0.98) << "m=" << m << " N=" << s.size();
    EXPECT_GE(c.lower, 1 / c.sigma_min * (1 - 1e-12));
  }
}

TEST(SpectralConstant, TwoDimensionalBracket) {
  const PointSet om = generate(make_generator(gen::UniformGrid{{2, 2}}));
  const SpectrumSlice s = enumerate_modes(2, 5, 1);
  const SpectralConstant c = spectral_constant(s, om);
  const double truth = polytope_oracle(eval_matrix(s, om));
  EXPECT_LE(c.lower, truth * (1 + 1e-9));
  EXPECT_GE(c.upper, truth * (1 - 1e-9));
}

TEST(SpectralConstant, Deterministic) {
  const PointSet om = generate(make_generator(gen::OmegaAlpha{1.0, 10}));
  const SpectrumSlice s = enumerate_modes(1, 16, 1);
  const SpectralConstant a = spectral_constant(s, om), b = spectral_constant(s, om);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_EQ(a.seeds.size(), 31u);
}

TEST(NullspaceWitness, DiagonalEigenspace) {
  Rng rng(3);
  std::vector<Point> pts;
  for (int i = 0; i < 2; ++i) {
    const double t = rng.uniform(0.05, 0.95);
    pts.push_back({t, t});
  }
  const PointSet om = make_point_set(2, pts);
  const SpectrumSlice s = enumerate_modes(2, 50, 1);
  const auto c = nullspace_witness(s, om, 1e-12, 50);
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR(c->norm(), 1.0, 1e-12);
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s.modes[j].index.sum_of_squares() != 50) EXPECT_EQ((*c)(static_cast<Eigen::Index>(j)), 0.0);
  EXPECT_FALSE(nullspace_witness(s, om, 1e-12, 3).has_value());
}

TEST(FitGrowth, RecoversSyntheticModel) {
  for (double beta : {0.3, 0.5, 0.8}) {
    for (double C : {0.2, 1.0, 2.0}) {
      std::vector<double> L, K;
      for (double l : {5.0, 10.0, 20.0, 40.0, 80.0, 160.0}) {
        L.push_back(l);
        K.push_back(C * std::exp(C * std::pow(l, beta)));
      }
      const SpectralFit f = fit_growth(L, K);
      EXPECT_NEAR(f.beta, beta, 1e-9);
      EXPECT_NEAR(f.C, C, 1e-6 * C);
      EXPECT_LT(f.residual, 1e-6);
      EXPECT_NEAR(f(L[2]), K[2], 1e-5 * K[2]);
    }
  }
}

TEST(FitGrowth, Errors) {
  EXPECT_THROW(fit_growth({1, 2}, {1, 2}), ContractError);
  EXPECT_THROW(fit_growth({1, 2, 3}, {1, 2}), ContractError);
  EXPECT_THROW(fit_growth({1, 2, 3}, {1, kInf, 3}), ContractError);
  EXPECT_THROW(fit_growth({1, 3, 2}, {1, 2, 3}), ContractError);
  EXPECT_THROW(fit_growth({1, 2, 3}, {1, 0, 3}), ContractError);
}

TEST(FitGrowth, OmegaAlphaSmallCutoffs) {
  // Double precision keeps sigma_min above tolerance only up to about eight modes.
  const PointSet om = generate(make_generator(gen::OmegaAlpha{1.0, 40}));
  std::vector<double> L, K;
  for (int k = 1; k <= 8; ++k) {
    const SpectralConstant c = spectral_constant(enumerate_modes(1, k * k, 1), om);
    ASSERT_EQ(c.status, SpectralStatus::finite) << k;
    L.push_back(k * k);
    K.push_back(c.lower);
  }
  const SpectralFit f = fit_growth(L, K);
  EXPECT_GT(f.beta, 0.0);
  EXPECT_LE(f.beta, 1.0);
  EXPECT_GT(f.C, 0.0);
}

TEST(ProductCompose, HoldsAndCountsModes) {
  const PointSet a = generate(make_generator(gen::OmegaAlpha{1.0, 10}));
  for (double L : {10.0, 20.0, 30.0}) {
    const ProductComposeReport r = product_compose_check(L, 1, a, a);
    EXPECT_EQ(r.modes_factor1, enumerate_modes(1, L, 1).size());
    EXPECT_EQ(r.modes_product, enumerate_modes(2, L, 1).size());
    EXPECT_FALSE(r.inherited_infinite);
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.composed_bound, r.factor1.upper * r.factor2.upper * std::sqrt(double(r.modes_factor1)), 1e-9 * r.composed_bound);
  }
}

TEST(ProductCompose, Errors) {
  const PointSet a = generate(make_generator(gen::OmegaAlpha{1.0, 10}));
  SpectralFit f1, f2;
  f1.beta = 0.5;
  f2.beta = 0.6;
  EXPECT_THROW(product_compose_check(10, 1, a, a, std::make_pair(f1, f2)), ContractError);
  EXPECT_THROW(product_compose_check(1, 1, a, a), ContractError);
}
