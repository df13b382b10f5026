#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "heatscope/pointsets.hpp"
#include "heatscope/rng.hpp"

using namespace heatscope;

namespace {

PointSet line(std::vector<double> xs) { return points_1d(xs); }

// Oracle: plain-product objective over every k-subset, no log space.
double brute_gamma(const std::vector<double>& x, int k) {
  const std::size_t m = x.size();
  double best = 0;
  std::vector<int> mask(m, 0);
  std::fill(mask.end() - k, mask.end(), 1);
  do {
    std::vector<double> s;
    for (std::size_t i = 0; i < m; ++i)
      if (mask[i]) s.push_back(x[i]);
    double val = kInf;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double p = 1;
      for (std::size_t j = 0; j < s.size(); ++j)
        if (j != i) p *= std::abs(s[i] - s[j]);
      val = std::min(val, p);
    }
    best = std::max(best, val);
  } while (std::next_permutation(mask.begin(), mask.end()));
  return best;
}

std::vector<double> random_set(Rng& rng, int m) {
  std::vector<double> x;
  while (static_cast<int>(x.size()) < m) {
    const double v = rng.uniform();
    if (std::find(x.begin(), x.end(), v) == x.end()) x.push_back(v);
  }
  return x;
}

// Fewest intervals of length 2r covering sorted points, by dynamic programming.
std::size_t min_interval_cover(std::vector<double> x, double r) {
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size();
  std::vector<std::size_t> dp(m + 1, 0);
  for (std::size_t i = m; i-- > 0;) {
    dp[i] = m + 1;
    for (std::size_t j = i; j < m && x[j] - x[i] <= 2 * r; ++j) dp[i] = std::min(dp[i], 1 + dp[j + 1]);
  }
  return dp[0];
}

}  // namespace

TEST(Generate, Examples) {
  const PointSet a = generate(make_generator(gen::OmegaAlpha{1.0, 3}));
  EXPECT_EQ(a.coords(), (std::vector<double>{1.0, 0.5, 1.0 / 3.0}));
  const PointSet e = generate(make_generator(gen::OmegaExp{3}));
  EXPECT_EQ(e.coords(), (std::vector<double>{0.5, 0.25, 0.125}));
  const PointSet p = generate(make_generator(
      gen::Product{make_generator(gen::Singleton{{0.3}}), make_generator(gen::OmegaExp{2})}));
  ASSERT_EQ(p.dimension, 2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.points[0], (Point{0.3, 0.5}));
  EXPECT_EQ(p.points[1], (Point{0.3, 0.25}));
  EXPECT_EQ(generator_tag(*p.generator), "product");
}

TEST(Generate, InvalidParameters) {
  EXPECT_THROW(generate(make_generator(gen::OmegaAlpha{0.0, 3})), DomainError);
  EXPECT_THROW(generate(make_generator(gen::OmegaAlpha{1.0, 0})), DomainError);
  EXPECT_THROW(generate(make_generator(gen::Singleton{{1.0}})), DomainError);
  EXPECT_THROW(generate(make_generator(gen::Cantor{-1, 0.3})), DomainError);
  EXPECT_THROW(generate(make_generator(gen::Cantor{2, 0.7})), DomainError);
}

TEST(Generate, GridAndCantor) {
  const PointSet g = generate(make_generator(gen::UniformGrid{{3, 2}}));
  EXPECT_EQ(g.size(), 6u);
  EXPECT_EQ(g.points.front(), (Point{0.25, 1.0 / 3.0}));
  const PointSet c = generate(make_generator(gen::Cantor{2, 1.0 / 3.0}));
  EXPECT_EQ(c.size(), 8u);
  EXPECT_DOUBLE_EQ(c.points[1][0], 1.0 / 9.0);
}

TEST(PointSet, DeduplicatesAndChecksBox) {
  const PointSet s = line({0.2, 0.4, 0.2});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_THROW(line({1.2}), DomainError);
  EXPECT_THROW(make_point_set(2, {{0.1}}), ContractError);
}

TEST(GammaExact, Examples) {
  const GammaEstimate a = gamma_exact(line({0, 1}), 2);
  EXPECT_NEAR(*a.value(), 1.0, 1e-15);
  EXPECT_EQ(a.witness, (std::vector<std::size_t>{0, 1}));
  const GammaEstimate b = gamma_exact(line({0, 0.5, 1}), 3);
  EXPECT_NEAR(*b.value(), 0.25, 1e-15);
  const GammaEstimate c = gamma_exact(line({0, 0.5, 1}), 2);
  EXPECT_NEAR(*c.value(), 1.0, 1e-15);
  EXPECT_EQ(c.witness, (std::vector<std::size_t>{0, 2}));
}

TEST(GammaExact, BudgetAndArguments) {
  const PointSet E = generate(make_generator(gen::OmegaAlpha{1.0, 40}));
  try {
    gamma_exact(E, 20, 1000);
    FAIL();
  } catch (const ResourceError& e) {
    EXPECT_NE(std::string(e.what()).find("greedy"), std::string::npos);
  }
  EXPECT_THROW(gamma_exact(E, 1), DomainError);
  EXPECT_THROW(gamma_exact(E, 41), DomainError);
  EXPECT_THROW(gamma_exact(generate(make_generator(gen::UniformGrid{{2, 2}})), 2), ContractError);
}

TEST(GammaExact, MatchesPlainProductOracle) {
  Rng rng(21);
  for (int t = 0; t < 60; ++t) {
    const int m = static_cast<int>(rng.uniform_int(2, 11));
    const int k = static_cast<int>(rng.uniform_int(2, m));
    const auto x = random_set(rng, m);
    const GammaEstimate g = gamma_exact(line(x), k);
    EXPECT_NEAR(*g.value(), brute_gamma(x, k), 1e-12 * std::max(1.0, brute_gamma(x, k)));
  }
}

TEST(GammaExact, LargeKUsesComplement) {
  // k > m/2 takes the complement enumeration path.
  Rng rng(5);
  const auto x = random_set(rng, 14);
  for (int k : {10, 12, 13, 14}) {
    const GammaEstimate g = gamma_exact(line(x), k);
    EXPECT_NEAR(std::exp(g.log_value), brute_gamma(x, k), 1e-10 * brute_gamma(x, k));
  }
}

TEST(GammaExact, Gamma2IsDiameter) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_set(rng, static_cast<int>(rng.uniform_int(2, 30)));
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    EXPECT_NEAR(*gamma_exact(line(x), 2).value(), *hi - *lo, 1e-12);
  }
}

TEST(GammaGreedy, Examples) {
  EXPECT_NEAR(*gamma_greedy_leja(line({0, 1}), 2).value(), 1.0, 1e-15);
  EXPECT_NEAR(*gamma_greedy_leja(line({0, 0.5, 1}), 3).value(), 0.25, 1e-15);
  const PointSet E = generate(make_generator(gen::OmegaAlpha{1.0, 12}));
  EXPECT_LE(gamma_greedy_leja(E, 4).log_value, gamma_exact(E, 4).log_value + 1e-12);
  EXPECT_EQ(gamma_greedy_leja(E, 4).method, GammaMethod::greedy_leja);
}

TEST(GammaGreedy, NeverAboveExact) {
  Rng rng(8);
  for (int t = 0; t < 80; ++t) {
    const int m = static_cast<int>(rng.uniform_int(2, 12));
    const int k = static_cast<int>(rng.uniform_int(2, std::min(m, 6)));
    const PointSet E = line(random_set(rng, m));
    const double g = gamma_greedy_leja(E, k).log_value, e = gamma_exact(E, k).log_value;
    EXPECT_LE(g, e + 1e-12);
    if (m <= 3) EXPECT_NEAR(g, e, 1e-12);
  }
}

TEST(Gamma, WitnessReproducesValue) {
  Rng rng(4);
  for (int t = 0; t < 40; ++t) {
    const PointSet E = line(random_set(rng, 12));
    for (const GammaEstimate& g : {gamma_exact(E, 5), gamma_greedy_leja(E, 5)}) {
      std::vector<double> pts;
      for (std::size_t i : g.witness) pts.push_back(E.points[i][0]);
      EXPECT_EQ(pts, g.witness_points);
      EXPECT_NEAR(gamma_objective_log(pts), g.log_value, 1e-12);
    }
  }
}

TEST(Gamma, TranslationAndDilation) {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    auto x = random_set(rng, 9);
    for (double& v : x) v *= 0.5;
    const int k = static_cast<int>(rng.uniform_int(2, 6));
    const double base = gamma_exact(line(x), k).log_value;
    auto shifted = x, scaled = x;
    for (double& v : shifted) v += 0.3;
    for (double& v : scaled) v *= 1.7;
    EXPECT_NEAR(gamma_exact(line(shifted), k).log_value, base, 1e-10);
    EXPECT_NEAR(gamma_exact(line(scaled), k).log_value, base + (k - 1) * std::log(1.7), 1e-10);
  }
}

TEST(Gamma, OmegaExpUnderflowReportedInLogSpace) {
  const PointSet E = generate(make_generator(gen::OmegaExp{80}));
  const GammaEstimate g = gamma_greedy_leja(E, 60);
  EXPECT_TRUE(std::isfinite(g.log_value));
  EXPECT_LT(g.log_value, std::log(std::numeric_limits<double>::min()));
  EXPECT_FALSE(g.value().has_value());
}

TEST(GrowthFit, OmegaAlphaSlopeNearMinusOne) {
  const PointSet E = generate(make_generator(gen::OmegaAlpha{1.0, 60}));
  const GammaGrowthFit f = gamma_growth_fit(E, 3, 12, GrowthLaw::k_log_k);
  EXPECT_LT(f.slope, 0);
  EXPECT_GT(f.slope, -2.0);
  EXPECT_NEAR(f.slope, -1.0, 0.5);
  // Oracle: the first-k witness {1, 1/2, ..., 1/k}.
  std::vector<double> xs, ys;
  for (int k = 3; k <= 12; ++k) {
    std::vector<double> first;
    for (int i = 1; i <= k; ++i) first.push_back(1.0 / i);
    xs.push_back(k * std::log(k));
    ys.push_back(gamma_objective_log(first));
  }
  EXPECT_NEAR(f.slope, fit_line(xs, ys).slope, 0.3);
}

TEST(GrowthFit, OmegaExpQuadratic) {
  const PointSet E = generate(make_generator(gen::OmegaExp{20}));
  const GammaGrowthFit f = gamma_growth_fit(E, 3, 12, GrowthLaw::k_squared, true);
  EXPECT_LT(f.slope, 0);
  for (std::size_t i = 0; i < f.ks.size(); ++i) {
    const double r = -f.log_gamma[i] / (f.ks[i] * f.ks[i]);
    EXPECT_GT(r, 0.15);
    EXPECT_LT(r, 1.0);
  }
}

TEST(GrowthFit, UniformPointsAnalytic) {
  // Points i/(m+1): gamma_m = h^{m-1} min_i (i-1)! (m-i)!.
  for (int m = 3; m <= 9; ++m) {
    const PointSet E = generate(make_generator(gen::UniformGrid{{m}}));
    const double h = 1.0 / (m + 1);
    double expect = kInf;
    for (int i = 1; i <= m; ++i) expect = std::min(expect, std::lgamma(i) + std::lgamma(m - i + 1.0));
    expect += (m - 1) * std::log(h);
    EXPECT_NEAR(gamma_exact(E, m).log_value, expect, 1e-12);
  }
}

TEST(GrowthFit, TooFewSamples) {
  const PointSet E = generate(make_generator(gen::OmegaAlpha{1.0, 20}));
  EXPECT_THROW(gamma_growth_fit(E, 3, 4, GrowthLaw::k_log_k), ContractError);
}

TEST(Hausdorff, Examples) {
  const PointSet one = line({0.4});
  EXPECT_NEAR(hausdorff_content_upper(one, 0.7, 0.1), std::pow(0.1, 0.7), 1e-15);
  const PointSet two = line({0.1, 0.9});
  EXPECT_NEAR(hausdorff_content_upper(two, 0.5, 0.1), 2 * std::sqrt(0.1), 1e-15);
  EXPECT_THROW(hausdorff_content_upper(one, 0, 0.1), DomainError);
  EXPECT_THROW(hausdorff_content_upper(one, 1, 0), DomainError);
}

TEST(Hausdorff, OmegaExpMatchesOptimalCover) {
  const PointSet E = generate(make_generator(gen::OmegaExp{20}));
  for (int m = 2; m <= 20; ++m) {
    const PointSet Em = generate(make_generator(gen::OmegaExp{m}));
    for (double r : {1.0 / 16, 1.0 / 64, 1.0 / 128, 1.0 / 1024})
      EXPECT_EQ(greedy_cover_count(Em, r), min_interval_cover(Em.coords(), r));
  }
  const double a = hausdorff_content_upper(E, 0.5, 1.0 / 64);
  const double b = hausdorff_content_upper(E, 0.5, 1.0 / 128);
  EXPECT_NEAR(a, 5 * 0.125, 1e-15);
  EXPECT_LE(b, a);
}

TEST(Hausdorff, HigherDimensionalCoverIsACover) {
  Rng rng(2);
  std::vector<Point> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({rng.uniform(), rng.uniform()});
  const PointSet E = make_point_set(2, pts);
  const std::size_t c = greedy_cover_count(E, 0.2);
  EXPECT_GE(c, 1u);
  EXPECT_LE(c, E.size());
}
