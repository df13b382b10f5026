#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "heatscope/eigenbasis.hpp"
#include "heatscope/errors.hpp"
#include "heatscope/numeric.hpp"
#include "heatscope/pointsets.hpp"
#include "heatscope/rng.hpp"

namespace heatscope {

using EvalMatrix = Eigen::MatrixXd;

// Rows follow the point order of omega, columns the mode order of the slice.
inline EvalMatrix eval_matrix(const SpectrumSlice& slice, const PointSet& omega) {
  if (slice.dimension != omega.dimension) throw ContractError("eval_matrix: slice and point set dimensions differ");
  const auto m = static_cast<Eigen::Index>(omega.size());
  const auto N = static_cast<Eigen::Index>(slice.size());
  EvalMatrix E(m, N);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < N; ++j) E(i, j) = eval_mode(slice.modes[static_cast<std::size_t>(j)], omega.points[static_cast<std::size_t>(i)]);
  return E;
}

enum class SpectralStatus { finite, infinite_nullspace };

inline const char* to_string(SpectralStatus s) {
  return s == SpectralStatus::finite ? "finite" : "infinite_nullspace";
}

// Bracket for the best constant K(Lambda) = sup_{c != 0} |c|_2 / max_i |(Ec)_i|.
struct SpectralConstant {
  double cutoff = 0.0;
  std::size_t rows = 0, cols = 0;
  double lower = 0.0;
  double upper = kInf;
  double sigma_min = 0.0;
  double tol = 0.0;
  CoefVec witness;
  SpectralStatus status = SpectralStatus::finite;
  std::vector<std::uint64_t> seeds;
};

struct SpectralOptions {
  std::optional<double> tol;  // default 1e-10 * sqrt(N)
  int starts = 32;
  int iterations = 200;
  std::uint64_t seed = 0x5eed;
};

inline double witness_ratio(const EvalMatrix& E, const CoefVec& c) {
  const double top = (E * c).cwiseAbs().maxCoeff();
  return top == 0 ? kInf : c.norm() / top;
}

namespace detail {

struct SmallestSingular {
  double sigma = 0.0;
  Eigen::VectorXd v;
};

inline SmallestSingular smallest_singular(const Eigen::MatrixXd& E) {
  const Eigen::Index m = E.rows(), N = E.cols();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
  SmallestSingular s;
  s.v = svd.matrixV().col(N - 1);
  s.sigma = m < N ? 0.0 : svd.singularValues()(N - 1);
  return s;
}

// Projected subgradient descent of |Ec|_inf on the unit sphere.
inline CoefVec sphere_descent(const EvalMatrix& E, CoefVec c, int iterations) {
  c.normalize();
  CoefVec best = c;
  double best_val = (E * c).cwiseAbs().maxCoeff();
  for (int t = 0; t < iterations; ++t) {
    const Eigen::VectorXd r = E * c;
    Eigen::Index i;
    const double val = r.cwiseAbs().maxCoeff(&i);
    if (val < best_val) {
      best_val = val;
      best = c;
    }
    Eigen::VectorXd g = (r(i) >= 0 ? 1.0 : -1.0) * E.row(i).transpose();
    g -= g.dot(c) * c;
    const double gn = g.norm();
    if (gn == 0) break;
    const double step = 0.3 / std::sqrt(t + 1.0);
    c -= step * g / gn;
    c.normalize();
  }
  const double last = (E * c).cwiseAbs().maxCoeff();
  if (last < best_val) best = c;
  return best;
}

}  // namespace detail

inline SpectralConstant spectral_constant(const SpectrumSlice& slice, const PointSet& omega,
                                          const SpectralOptions& opt = {}) {
  const EvalMatrix E = eval_matrix(slice, omega);
  if (E.rows() < 1 || E.cols() < 1) throw ContractError("spectral_constant: need m >= 1 points and N >= 1 modes");
  SpectralConstant sc;
  sc.cutoff = slice.cutoff;
  sc.rows = static_cast<std::size_t>(E.rows());
  sc.cols = static_cast<std::size_t>(E.cols());
  sc.tol = opt.tol.value_or(1e-10 * std::sqrt(static_cast<double>(E.cols())));

  const auto ss = detail::smallest_singular(E);
  sc.sigma_min = ss.sigma;
  if (E.rows() < E.cols() || ss.sigma <= sc.tol) {
    sc.status = SpectralStatus::infinite_nullspace;
    sc.witness = ss.v.normalized();
    sc.lower = witness_ratio(E, sc.witness);
    sc.upper = kInf;
    return sc;
  }

  sc.status = SpectralStatus::finite;
  sc.upper = std::sqrt(static_cast<double>(E.rows())) / ss.sigma;
  sc.witness = ss.v;
  sc.lower = witness_ratio(E, sc.witness);
  for (int s = 0; s < opt.starts; ++s) {
    CoefVec start;
    if (s == 0) {
      start = ss.v;
    } else {
      const std::uint64_t seed = mix64(opt.seed + static_cast<std::uint64_t>(s));
      sc.seeds.push_back(seed);
      Rng rng(seed);
      start.resize(E.cols());
      for (Eigen::Index j = 0; j < E.cols(); ++j) start(j) = rng.normal();
    }
    const CoefVec c = detail::sphere_descent(E, start, opt.iterations);
    const double ratio = witness_ratio(E, c);
    if (ratio > sc.lower) {
      sc.lower = ratio;
      sc.witness = c;
    }
  }
  sc.lower = std::min(witness_ratio(E, sc.witness), sc.upper);
  return sc;
}

// Unit coefficient vector with max_i |(Ec)_i| <= tol, optionally confined to the
// eigenspace of eigenvalue scale*r (a genuine eigenfunction vanishing on omega).
inline std::optional<CoefVec> nullspace_witness(const SpectrumSlice& slice, const PointSet& omega, double tol,
                                                std::optional<std::int64_t> eigenspace_r = std::nullopt) {
  const EvalMatrix E = eval_matrix(slice, omega);
  std::vector<std::size_t> cols;
  if (eigenspace_r) {
    cols = eigenspace_columns(slice, *eigenspace_r);
  } else {
    for (std::size_t j = 0; j < slice.size(); ++j) cols.push_back(j);
  }
  if (cols.empty()) return std::nullopt;
  Eigen::MatrixXd sub(E.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = E.col(static_cast<Eigen::Index>(cols[j]));
  if (sub.rows() == 0) {
    CoefVec c = CoefVec::Zero(static_cast<Eigen::Index>(slice.size()));
    c(static_cast<Eigen::Index>(cols[0])) = 1.0;
    return c;
  }
  const auto ss = detail::smallest_singular(sub);
  CoefVec c = CoefVec::Zero(static_cast<Eigen::Index>(slice.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) c(static_cast<Eigen::Index>(cols[j])) = ss.v(static_cast<Eigen::Index>(j));
  c.normalize();
  if ((E * c).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  return c;
}

// log(constant) = log C + C * Lambda^beta, beta on a 0.01 grid in (0, 1].
struct SpectralFit {
  std::vector<double> cutoffs;
  std::vector<double> constants;
  double C = 0.0;
  double beta = 0.0;
  double residual = 0.0;

  double operator()(double cutoff) const { return C * std::exp(C * std::pow(cutoff, beta)); }
};

namespace detail {

inline double growth_rss(const std::vector<double>& x, const std::vector<double>& ly, double u) {
  const double C = std::exp(u);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = ly[i] - u - C * x[i];
    s += r * r;
  }
  return s;
}

}  // namespace detail

inline SpectralFit fit_growth(const std::vector<double>& cutoffs, const std::vector<double>& constants) {
  if (cutoffs.size() != constants.size()) throw ContractError("fit_growth: sample arrays differ in length");
  if (cutoffs.size() < 3) throw ContractError("fit_growth: need at least three samples");
  for (std::size_t i = 0; i < constants.size(); ++i) {
    if (!std::isfinite(constants[i]) || !(constants[i] > 0))
      throw ContractError("fit_growth: sample " + std::to_string(i) + " is not a finite positive constant");
    if (i > 0 && !(cutoffs[i] > cutoffs[i - 1])) throw ContractError("fit_growth: cutoffs must increase strictly");
  }
  std::vector<double> ly(constants.size());
  for (std::size_t i = 0; i < ly.size(); ++i) ly[i] = std::log(constants[i]);

  SpectralFit best;
  best.cutoffs = cutoffs;
  best.constants = constants;
  double best_rss = kInf;
  std::vector<double> x(cutoffs.size());
  for (int b = 1; b <= 100; ++b) {
    const double beta = b / 100.0;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::pow(cutoffs[i], beta);
    // Coarse scan of u = log C, then golden-section refinement.
    double u_best = -25.0, f_best = kInf;
    for (int s = 0; s <= 1400; ++s) {
      const double u = -25.0 + 0.025 * s;
      const double f = detail::growth_rss(x, ly, u);
      if (f < f_best) {
        f_best = f;
        u_best = u;
      }
    }
    double a = u_best - 0.025, c = u_best + 0.025;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
      const double u1 = c - phi * (c - a), u2 = a + phi * (c - a);
      if (detail::growth_rss(x, ly, u1) < detail::growth_rss(x, ly, u2)) c = u2;
      else a = u1;
    }
    const double u = 0.5 * (a + c);
    const double f = std::min(f_best, detail::growth_rss(x, ly, u));
    const double u_use = f < f_best ? u : u_best;
    if (f < best_rss) {
      best_rss = f;
      best.beta = beta;
      best.C = std::exp(u_use);
    }
  }
  best.residual = std::sqrt(best_rss);
  return best;
}

// Product box (0,1)^{n1+n2} observed from omega1 x omega2 at cutoff Lambda.
struct ProductComposeReport {
  double cutoff = 0.0;
  std::size_t modes_factor1 = 0, modes_factor2 = 0, modes_product = 0;
  SpectralConstant factor1, factor2, product;
  double weyl_factor = 1.0;  // sqrt(N1), the cardinality price
  double composed_bound = kInf;
  bool holds = false;
  bool inherited_infinite = false;
  std::optional<double> fit_form_bound;  // C1 C2 sqrt(N1) exp((C1 + C2) Lambda^beta)
  std::optional<bool> fit_form_holds;
};

inline ProductComposeReport product_compose_check(double cutoff, double scale, const PointSet& omega1,
                                                  const PointSet& omega2,
                                                  const std::optional<std::pair<SpectralFit, SpectralFit>>& fits = std::nullopt,
                                                  const SpectralOptions& opt = {}) {
  if (fits && fits->first.beta != fits->second.beta)
    throw ContractError("product_compose_check: factor fits have different beta");
  ProductComposeReport rep;
  rep.cutoff = cutoff;
  const SpectrumSlice s1 = enumerate_modes(omega1.dimension, cutoff, scale);
  const SpectrumSlice s2 = enumerate_modes(omega2.dimension, cutoff, scale);
  const SpectrumSlice sp = enumerate_modes(omega1.dimension + omega2.dimension, cutoff, scale);
  rep.modes_factor1 = s1.size();
  rep.modes_factor2 = s2.size();
  rep.modes_product = sp.size();
  if (sp.empty()) throw ContractError("product_compose_check: product slice is empty at this cutoff");

  rep.factor1 = spectral_constant(s1, omega1, opt);
  rep.factor2 = spectral_constant(s2, omega2, opt);
  rep.product = spectral_constant(sp, cartesian_product(omega1, omega2), opt);
  rep.inherited_infinite = rep.factor1.status == SpectralStatus::infinite_nullspace ||
                           rep.factor2.status == SpectralStatus::infinite_nullspace;
  rep.weyl_factor = std::sqrt(static_cast<double>(s1.size()));
  rep.composed_bound = rep.inherited_infinite ? kInf : rep.factor1.upper * rep.factor2.upper * rep.weyl_factor;
  rep.holds = rep.product.lower <= rep.composed_bound;
  if (fits) {
    const double b = fits->first.beta;
    const double c1 = fits->first.C, c2 = fits->second.C;
    rep.fit_form_bound = c1 * c2 * rep.weyl_factor * std::exp((c1 + c2) * std::pow(cutoff, b));
    rep.fit_form_holds = rep.product.lower <= *rep.fit_form_bound;
  }
  return rep;
}

}  // namespace heatscope
