#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "heatscope/errors.hpp"
#include "heatscope/numeric.hpp"

namespace heatscope {

using Point = std::vector<double>;

struct GeneratorSpec;
using GeneratorPtr = std::shared_ptr<const GeneratorSpec>;

namespace gen {
struct OmegaAlpha {
  double alpha = 1.0;
  int m = 1;
};
struct OmegaExp {
  int m = 1;
};
struct Singleton {
  Point x0;
};
struct UniformGrid {
  std::vector<int> per_axis;  // interior points i/(m+1), i = 1..m
};
struct Cantor {
  int level = 0;
  double ratio = 1.0 / 3.0;  // length ratio of each kept subinterval
};
struct Product {
  GeneratorPtr a, b;
};
struct Explicit {
  int dimension = 1;
  std::vector<Point> points;
};
}  // namespace gen

struct GeneratorSpec {
  std::variant<gen::OmegaAlpha, gen::OmegaExp, gen::Singleton, gen::UniformGrid, gen::Cantor,
               gen::Product, gen::Explicit>
      kind;
};

template <class T>
GeneratorPtr make_generator(T spec) {
  return std::make_shared<const GeneratorSpec>(GeneratorSpec{std::move(spec)});
}

inline std::string generator_tag(const GeneratorSpec& g) {
  struct V {
    std::string operator()(const gen::OmegaAlpha&) const { return "omega_alpha"; }
    std::string operator()(const gen::OmegaExp&) const { return "omega_exp"; }
    std::string operator()(const gen::Singleton&) const { return "singleton"; }
    std::string operator()(const gen::UniformGrid&) const { return "uniform_grid"; }
    std::string operator()(const gen::Cantor&) const { return "cantor"; }
    std::string operator()(const gen::Product&) const { return "product"; }
    std::string operator()(const gen::Explicit&) const { return "explicit"; }
  };
  return std::visit(V{}, g.kind);
}

// Finite observation set in [0,1]^n. Points are distinct; order is the
// generator's natural order.
struct PointSet {
  int dimension = 1;
  std::vector<Point> points;
  GeneratorPtr generator;

  std::size_t size() const { return points.size(); }

  // Coordinates of a one-dimensional set.
  std::vector<double> coords() const {
    if (dimension != 1) throw ContractError("PointSet::coords: set is not one-dimensional");
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p[0]);
    return out;
  }
};

inline PointSet make_point_set(int dimension, std::vector<Point> pts, GeneratorPtr generator = nullptr) {
  if (dimension < 1) throw DomainError("PointSet: dimension must be >= 1");
  PointSet s;
  s.dimension = dimension;
  s.generator = std::move(generator);
  std::set<Point> seen;
  for (auto& p : pts) {
    if (static_cast<int>(p.size()) != dimension) throw ContractError("PointSet: point dimension mismatch");
    for (double v : p)
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("PointSet: point lies outside the closed unit box");
    if (seen.insert(p).second) s.points.push_back(std::move(p));
  }
  return s;
}

inline PointSet points_1d(std::span<const double> xs) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back({x});
  return make_point_set(1, std::move(pts), make_generator(gen::Explicit{1, {}}));
}

inline PointSet generate(const GeneratorPtr& g);

namespace detail {

inline std::vector<double> cantor_endpoints(int level, double ratio) {
  std::vector<std::pair<double, double>> intervals{{0.0, 1.0}};
  for (int l = 0; l < level; ++l) {
    std::vector<std::pair<double, double>> next;
    next.reserve(intervals.size() * 2);
    for (auto [a, b] : intervals) {
      const double len = (b - a) * ratio;
      next.emplace_back(a, a + len);
      next.emplace_back(b - len, b);
    }
    intervals = std::move(next);
  }
  std::vector<double> pts;
  for (auto [a, b] : intervals) {
    pts.push_back(a);
    pts.push_back(b);
  }
  return pts;
}

}  // namespace detail

inline PointSet generate(const GeneratorPtr& g) {
  if (!g) throw ContractError("generate: null generator");
  struct V {
    const GeneratorPtr& self;
    PointSet operator()(const gen::OmegaAlpha& s) const {
      if (!(s.alpha > 0)) throw DomainError("omega_alpha: alpha must be > 0");
      if (s.m < 1) throw DomainError("omega_alpha: m must be >= 1");
      std::vector<Point> pts;
      for (int i = 1; i <= s.m; ++i) pts.push_back({std::pow(static_cast<double>(i), -s.alpha)});
      return make_point_set(1, std::move(pts), self);
    }
    PointSet operator()(const gen::OmegaExp& s) const {
      if (s.m < 1) throw DomainError("omega_exp: m must be >= 1");
      if (s.m > 1000) throw DomainError("omega_exp: m must be <= 1000 (2^-m underflows)");
      std::vector<Point> pts;
      for (int i = 1; i <= s.m; ++i) pts.push_back({std::ldexp(1.0, -i)});
      return make_point_set(1, std::move(pts), self);
    }
    PointSet operator()(const gen::Singleton& s) const {
      if (s.x0.empty()) throw DomainError("singleton: empty point");
      for (double v : s.x0)
        if (!(v > 0.0 && v < 1.0)) throw DomainError("singleton: coordinates must lie in (0,1)");
      return make_point_set(static_cast<int>(s.x0.size()), {s.x0}, self);
    }
    PointSet operator()(const gen::UniformGrid& s) const {
      if (s.per_axis.empty()) throw DomainError("uniform_grid: no axes");
      std::vector<Point> pts{Point{}};
      for (int m : s.per_axis) {
        if (m < 1) throw DomainError("uniform_grid: per-axis count must be >= 1");
        std::vector<Point> next;
        for (const auto& p : pts)
          for (int i = 1; i <= m; ++i) {
            Point q = p;
            q.push_back(static_cast<double>(i) / (m + 1));
            next.push_back(std::move(q));
          }
        pts = std::move(next);
      }
      return make_point_set(static_cast<int>(s.per_axis.size()), std::move(pts), self);
    }
    PointSet operator()(const gen::Cantor& s) const {
      if (s.level < 0 || s.level > 20) throw DomainError("cantor: level must be in [0, 20]");
      if (!(s.ratio > 0 && s.ratio <= 0.5)) throw DomainError("cantor: ratio must be in (0, 1/2]");
      std::vector<Point> pts;
      for (double x : detail::cantor_endpoints(s.level, s.ratio)) pts.push_back({x});
      return make_point_set(1, std::move(pts), self);
    }
    PointSet operator()(const gen::Product& s) const {
      const PointSet A = generate(s.a), B = generate(s.b);
      std::vector<Point> pts;
      pts.reserve(A.size() * B.size());
      for (const auto& a : A.points)
        for (const auto& b : B.points) {
          Point q = a;
          q.insert(q.end(), b.begin(), b.end());
          pts.push_back(std::move(q));
        }
      return make_point_set(A.dimension + B.dimension, std::move(pts), self);
    }
    PointSet operator()(const gen::Explicit& s) const {
      return make_point_set(s.dimension, s.points, self);
    }
  };
  return std::visit(V{g}, g->kind);
}

inline PointSet cartesian_product(const PointSet& A, const PointSet& B) {
  std::vector<Point> pts;
  pts.reserve(A.size() * B.size());
  for (const auto& a : A.points)
    for (const auto& b : B.points) {
      Point q = a;
      q.insert(q.end(), b.begin(), b.end());
      pts.push_back(std::move(q));
    }
  GeneratorPtr g;
  if (A.generator && B.generator) g = make_generator(gen::Product{A.generator, B.generator});
  return make_point_set(A.dimension + B.dimension, std::move(pts), g);
}

// ---------------------------------------------------------------------------
// gamma_k(E) = sup over k-subsets of min_i prod_{j != i} |x_i - x_j|.
// Everything is carried in log space; products like C^{-k^2} underflow fast.

enum class GammaMethod { exact, greedy_leja };

inline const char* to_string(GammaMethod m) { return m == GammaMethod::exact ? "exact" : "greedy_leja"; }

struct GammaEstimate {
  int k = 0;
  double log_value = -kInf;
  std::vector<std::size_t> witness;  // indices into E, ascending
  std::vector<double> witness_points;
  GammaMethod method = GammaMethod::exact;

  // Linear-scale value when it is representable as a normal double.
  std::optional<double> value() const {
    if (log_value == -kInf) return 0.0;
    if (log_value < std::log(std::numeric_limits<double>::min())) return std::nullopt;
    return std::exp(log_value);
  }
};

// log of min_i prod_{j != i} |x_i - x_j| for the given nodes.
inline double gamma_objective_log(std::span<const double> nodes) {
  double best = kInf;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (j != i) s += std::log(std::abs(nodes[i] - nodes[j]));
    best = std::min(best, s);
  }
  return best;
}

inline double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline constexpr double kDefaultSubsetBudget = 5e6;

namespace detail {

inline std::vector<std::vector<double>> log_distance_table(const std::vector<double>& x) {
  const std::size_t m = x.size();
  std::vector<std::vector<double>> L(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) L[i][j] = std::log(std::abs(x[i] - x[j]));
  return L;
}

// Advance a strictly increasing combination of size r over {0..m-1}.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t m) {
  const std::size_t r = c.size();
  for (std::size_t i = r; i-- > 0;) {
    if (c[i] < m - r + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline void check_gamma_args(const PointSet& E, int k, const char* who) {
  if (E.dimension != 1) throw ContractError(std::string(who) + ": gamma_k is defined for one-dimensional sets only");
  if (k < 2 || static_cast<std::size_t>(k) > E.size())
    throw DomainError(std::string(who) + ": need 2 <= k <= |E|");
}

}  // namespace detail

inline GammaEstimate gamma_exact(const PointSet& E, int k, double budget = kDefaultSubsetBudget) {
  detail::check_gamma_args(E, k, "gamma_exact");
  const std::vector<double> x = E.coords();
  const std::size_t m = x.size(), kk = static_cast<std::size_t>(k);
  if (log_binomial(m, kk) > std::log(budget))
    throw ResourceError("gamma_exact: C(" + std::to_string(m) + "," + std::to_string(k) +
                        ") subsets exceed the budget of " + std::to_string(static_cast<long long>(budget)) +
                        "; use the greedy_leja method");
  const auto L = detail::log_distance_table(x);

  GammaEstimate best;
  best.k = k;
  best.method = GammaMethod::exact;
  auto consider = [&](double val, const std::vector<std::size_t>& chosen) {
    if (val > best.log_value || (val == best.log_value && (best.witness.empty() || chosen < best.witness))) {
      best.log_value = val;
      best.witness = chosen;
    }
  };

  if (kk <= m - kk) {
    std::vector<std::size_t> c(kk);
    for (std::size_t i = 0; i < kk; ++i) c[i] = i;
    do {
      double val = kInf;
      for (std::size_t a : c) {
        double s = 0.0;
        for (std::size_t b : c)
          if (a != b) s += L[a][b];
        val = std::min(val, s);
      }
      consider(val, c);
    } while (detail::next_combination(c, m));
  } else {
    // Enumerate the removed points instead; row sums over E are reused.
    std::vector<double> full(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) full[i] += L[i][j];
    const std::size_t r = m - kk;
    std::vector<std::size_t> removed(r);
    for (std::size_t i = 0; i < r; ++i) removed[i] = i;
    std::vector<char> is_removed(m, 0);
    std::vector<std::size_t> chosen;
    chosen.reserve(kk);
    do {
      std::fill(is_removed.begin(), is_removed.end(), 0);
      for (std::size_t q : removed) is_removed[q] = 1;
      double val = kInf;
      for (std::size_t i = 0; i < m; ++i) {
        if (is_removed[i]) continue;
        double s = full[i];
        for (std::size_t q : removed) s -= L[i][q];
        val = std::min(val, s);
      }
      if (val >= best.log_value) {
        chosen.clear();
        for (std::size_t i = 0; i < m; ++i)
          if (!is_removed[i]) chosen.push_back(i);
        consider(val, chosen);
      }
    } while (r > 0 && detail::next_combination(removed, m));
  }
  for (std::size_t i : best.witness) best.witness_points.push_back(x[i]);
  // Report the objective recomputed from the witness so the two always agree.
  best.log_value = gamma_objective_log(best.witness_points);
  return best;
}

inline GammaEstimate gamma_greedy_leja(const PointSet& E, int k) {
  detail::check_gamma_args(E, k, "gamma_greedy_leja");
  const std::vector<double> x = E.coords();
  const std::size_t m = x.size();

  // Seed: diameter pair (smallest and largest coordinate).
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (x[i] < x[lo]) lo = i;
    if (x[i] > x[hi]) hi = i;
  }
  std::vector<std::size_t> w{lo, hi};
  std::vector<double> partial{std::log(x[hi] - x[lo]), std::log(x[hi] - x[lo])};
  std::vector<char> used(m, 0);
  used[lo] = used[hi] = 1;

  while (w.size() < static_cast<std::size_t>(k)) {
    std::size_t best_i = m;
    double best_val = -kInf;
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      double own = 0.0, val = kInf;
      for (std::size_t t = 0; t < w.size(); ++t) {
        const double l = std::log(std::abs(x[c] - x[w[t]]));
        own += l;
        val = std::min(val, partial[t] + l);
      }
      val = std::min(val, own);
      if (best_i == m || val > best_val || (val == best_val && x[c] < x[best_i])) {
        best_val = val;
        best_i = c;
      }
    }
    double own = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) {
      const double l = std::log(std::abs(x[best_i] - x[w[t]]));
      partial[t] += l;
      own += l;
    }
    w.push_back(best_i);
    partial.push_back(own);
    used[best_i] = 1;
  }

  GammaEstimate est;
  est.k = k;
  est.method = GammaMethod::greedy_leja;
  std::sort(w.begin(), w.end());
  est.witness = w;
  for (std::size_t i : w) est.witness_points.push_back(x[i]);
  est.log_value = gamma_objective_log(est.witness_points);
  return est;
}

// Exact when the subset count fits the budget, greedy otherwise.
inline GammaEstimate gamma_auto(const PointSet& E, int k, double budget = kDefaultSubsetBudget) {
  if (log_binomial(E.size(), static_cast<std::size_t>(k)) <= std::log(budget)) return gamma_exact(E, k, budget);
  return gamma_greedy_leja(E, k);
}

enum class GrowthLaw { k_log_k, k_squared };

struct GammaGrowthFit {
  GrowthLaw law = GrowthLaw::k_log_k;
  std::vector<int> ks;
  std::vector<double> log_gamma;
  std::vector<GammaMethod> methods;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

inline double growth_abscissa(GrowthLaw law, int k) {
  const double kd = k;
  return law == GrowthLaw::k_log_k ? kd * std::log(kd) : kd * kd;
}

// Least-squares slope of log gamma_k against k log k or k^2.
inline GammaGrowthFit gamma_growth_fit(const PointSet& E, int k_lo, int k_hi, GrowthLaw law,
                                       bool prefer_exact = false, double budget = kDefaultSubsetBudget) {
  if (k_hi - k_lo + 1 < 3) throw ContractError("gamma_growth_fit: need at least three k values");
  GammaGrowthFit fit;
  fit.law = law;
  std::vector<double> xs;
  for (int k = k_lo; k <= k_hi; ++k) {
    const GammaEstimate g = prefer_exact ? gamma_auto(E, k, budget) : gamma_greedy_leja(E, k);
    fit.ks.push_back(k);
    fit.log_gamma.push_back(g.log_value);
    fit.methods.push_back(g.method);
    xs.push_back(growth_abscissa(law, k));
  }
  const LineFit lf = fit_line(xs, fit.log_gamma);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.residual = lf.residual;
  return fit;
}

// Upper bound for the s-dimensional Hausdorff content from a greedy cover by
// radius-r balls: (ball count) * r^s. One-dimensional sets use the optimal
// left-to-right interval sweep; higher dimensions center balls on the first
// uncovered point.
inline std::size_t greedy_cover_count(const PointSet& E, double r) {
  if (!(r > 0 && r <= 1)) throw DomainError("hausdorff_content_upper: radius must be in (0, 1]");
  if (E.size() == 0) return 0;
  if (E.dimension == 1) {
    std::vector<double> x = E.coords();
    std::sort(x.begin(), x.end());
    std::size_t count = 0;
    double covered_to = -kInf;
    for (double v : x) {
      if (v <= covered_to) continue;
      ++count;
      covered_to = v + 2.0 * r;
    }
    return count;
  }
  std::vector<char> covered(E.size(), 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < E.size(); ++i) {
    if (covered[i]) continue;
    ++count;
    for (std::size_t j = i; j < E.size(); ++j) {
      double d2 = 0.0;
      for (int a = 0; a < E.dimension; ++a) {
        const double d = E.points[i][a] - E.points[j][a];
        d2 += d * d;
      }
      if (d2 <= r * r) covered[j] = 1;
    }
  }
  return count;
}

inline double hausdorff_content_upper(const PointSet& E, double s, double r) {
  if (!(s > 0)) throw DomainError("hausdorff_content_upper: exponent must be > 0");
  return static_cast<double>(greedy_cover_count(E, r)) * std::pow(r, s);
}

}  // namespace heatscope
