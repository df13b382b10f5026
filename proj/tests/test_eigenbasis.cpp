#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "heatscope/eigenbasis.hpp"
#include "heatscope/rng.hpp"

using namespace heatscope;

namespace {

// Oracle: every tuple in the box 1 <= k_i <= ceil(sqrt(cutoff/scale)).
std::vector<std::vector<int>> brute_modes(int n, double cutoff, double scale) {
  const int top = static_cast<int>(std::ceil(std::sqrt(cutoff / scale))) + 1;
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 1);
  for (;;) {
    long s = 0;
    for (int v : cur) s += static_cast<long>(v) * v;
    if (scale * static_cast<double>(s) <= cutoff * (1 + 1e-12)) out.push_back(cur);
    int a = 0;
    while (a < n && ++cur[static_cast<std::size_t>(a)] > top) cur[static_cast<std::size_t>(a++)] = 1;
    if (a == n) break;
  }
  return out;
}

}  // namespace

TEST(Enumerate, TwoDimensionalScaleOne) {
  const SpectrumSlice s = enumerate_modes(2, 5, 1);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.modes[0].index.k, (std::vector<int>{1, 1}));
  EXPECT_EQ(s.modes[1].index.k, (std::vector<int>{1, 2}));
  EXPECT_EQ(s.modes[2].index.k, (std::vector<int>{2, 1}));
  EXPECT_DOUBLE_EQ(s.modes[0].eigenvalue, 2);
  EXPECT_DOUBLE_EQ(s.modes[1].eigenvalue, 5);
  EXPECT_DOUBLE_EQ(s.modes[2].eigenvalue, 5);
}

TEST(Enumerate, EmptyBelowFirstEigenvalue) { EXPECT_TRUE(enumerate_modes(1, 0.5, 1).empty()); }

TEST(Enumerate, PhysicalScaleIncludesBoundary) {
  const SpectrumSlice s = enumerate_modes(1, 4 * kPi * kPi);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s.modes[0].eigenvalue, kPi * kPi, 1e-12);
  EXPECT_NEAR(s.modes[1].eigenvalue, 4 * kPi * kPi, 1e-12);
}

TEST(Enumerate, BadArguments) {
  EXPECT_THROW(enumerate_modes(0, 5, 1), DomainError);
  EXPECT_THROW(enumerate_modes(1, -1, 1), DomainError);
  EXPECT_THROW(enumerate_modes(1, 5, 0), DomainError);
}

TEST(Enumerate, LimitNamedInError) {
  try {
    enumerate_modes(3, 1e4, 1, 1000);
    FAIL();
  } catch (const ResourceError& e) {
    EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
  }
}

TEST(Enumerate, MatchesBruteForceAndOrdering) {
  for (int n = 1; n <= 3; ++n)
    for (double cutoff : {1.0, 7.5, 30.0, 101.0, 400.0}) {
      const SpectrumSlice s = enumerate_modes(n, cutoff, 1);
      const auto oracle = brute_modes(n, cutoff, 1);
      ASSERT_EQ(s.size(), oracle.size()) << n << " " << cutoff;
      std::set<std::vector<int>> a(oracle.begin(), oracle.end()), b;
      for (const auto& m : s.modes) b.insert(m.index.k);
      EXPECT_EQ(a, b);
      for (std::size_t j = 1; j < s.size(); ++j) {
        const auto& p = s.modes[j - 1];
        const auto& q = s.modes[j];
        ASSERT_TRUE(p.eigenvalue < q.eigenvalue || (p.eigenvalue == q.eigenvalue && p.index.k < q.index.k));
      }
    }
}

TEST(Enumerate, CountMonotoneInCutoff) {
  std::size_t prev = 0;
  for (double L = 1; L <= 300; L += 7) {
    const std::size_t c = enumerate_modes(2, L, 1).size();
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(EvalMode, Examples) {
  const SpectrumSlice s1 = make_slice(1, {MultiIndex{{1}}});
  const double half[] = {0.5};
  EXPECT_NEAR(eval_mode(s1.modes[0], half), std::sqrt(2.0), 1e-15);
  const SpectrumSlice s2 = make_slice(2, {MultiIndex{{1, 1}}, MultiIndex{{2, 3}}});
  const double edge[] = {0.0, 0.7};
  EXPECT_EQ(eval_mode(s2.modes[0], edge), 0.0);
  const double p[] = {0.25, 0.5};
  EXPECT_NEAR(eval_mode(s2.modes[1], p), -2.0, 1e-14);
}

TEST(EvalMode, OutsideBox) {
  const SpectrumSlice s1 = make_slice(1, {MultiIndex{{1}}});
  const double x[] = {1.5};
  EXPECT_THROW(eval_mode(s1.modes[0], x), DomainError);
}

TEST(EvalCombination, Examples) {
  const SpectrumSlice s = enumerate_modes(1, 4, 1);
  CoefVec c(2);
  c << 1, 1;
  const double x[] = {0.5};
  EXPECT_NEAR(eval_combination(s, c, x), std::sqrt(2.0), 1e-14);
  EXPECT_EQ(eval_combination(s, CoefVec::Zero(2), x), 0.0);
  EXPECT_THROW(eval_combination(s, CoefVec::Zero(3), x), ContractError);
}

TEST(EvalCombination, Linear) {
  const SpectrumSlice s = enumerate_modes(2, 30, 1);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    CoefVec a(static_cast<Eigen::Index>(s.size())), b(static_cast<Eigen::Index>(s.size()));
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
    }
    const double x[] = {rng.uniform(), rng.uniform()};
    const double lhs = eval_combination(s, 2 * a - b, x);
    const double rhs = 2 * eval_combination(s, a, x) - eval_combination(s, b, x);
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(EvalMode, Orthonormal) {
  // Midpoint rule with 2000 nodes per axis is exact for these trigonometric products.
  const int G = 2000;
  const SpectrumSlice s = enumerate_modes(2, 40, 1);
  Rng rng(11);
  for (int t = 0; t < 6; ++t) {
    const auto& a = s.modes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(s.size()) - 1))];
    const auto& b = s.modes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(s.size()) - 1))];
    double axis[2];
    for (int d = 0; d < 2; ++d) {
      double acc = 0;
      for (int g = 0; g < G; ++g) {
        const double x = (g + 0.5) / G;
        acc += 2 * std::sin(kPi * a.index.k[static_cast<std::size_t>(d)] * x) * std::sin(kPi * b.index.k[static_cast<std::size_t>(d)] * x);
      }
      axis[d] = acc / G;
    }
    EXPECT_NEAR(axis[0] * axis[1], a.index == b.index ? 1.0 : 0.0, 1e-6);
  }
}

TEST(Multiplicity, Examples) {
  EXPECT_EQ(multiplicity(2, 2), 1);
  EXPECT_EQ(multiplicity(2, 5), 2);
  EXPECT_EQ(multiplicity(2, 3), 0);
  EXPECT_EQ(multiplicity(2, 50), 3);
}

TEST(Multiplicity, MatchesSliceCount) {
  for (int n = 1; n <= 3; ++n) {
    const SpectrumSlice s = enumerate_modes(n, 200 * kPi * kPi);
    std::map<std::int64_t, std::int64_t> counts;
    for (const auto& m : s.modes) ++counts[m.index.sum_of_squares()];
    for (std::int64_t r = 1; r <= 200; ++r) EXPECT_EQ(multiplicity(n, r), counts[r]) << n << " " << r;
  }
}

TEST(FindHighMultiplicity, Examples) {
  EXPECT_EQ(find_high_multiplicity(2, 1, 2), 2);
  EXPECT_EQ(find_high_multiplicity(2, 3, 100), 50);
  EXPECT_FALSE(find_high_multiplicity(2, 100, 10).has_value());
}

TEST(DiagonalWitness, VanishesOnDiagonal) {
  const SpectrumSlice s = enumerate_modes(2, 5, 1);
  const auto c = diagonal_antisymmetric_witness(s, 5);
  ASSERT_TRUE(c.has_value());
  for (int i = 0; i <= 50; ++i) {
    const double x[] = {i / 50.0, i / 50.0};
    EXPECT_NEAR(eval_combination(s, *c, x), 0.0, 1e-14);
  }
  EXPECT_FALSE(diagonal_antisymmetric_witness(s, 2).has_value());
}
