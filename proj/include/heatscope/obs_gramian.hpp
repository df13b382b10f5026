#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "heatscope/eigenbasis.hpp"
#include "heatscope/errors.hpp"
#include "heatscope/pointsets.hpp"

namespace heatscope {

// The Gramian of exponentials e^{-lambda t} on [0,T] is Cauchy-like and loses
// roughly one decimal digit per mode; 100 digits cover the desk-scale sweeps
// (relative pivots near 1e-47 at 60 modes).
using HighPrec = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>,
                                               boost::multiprecision::et_off>;

inline HighPrec hp_pi() { return boost::math::constants::pi<HighPrec>(); }

// sqrt(2) sin(pi k x) evaluated in extended precision; k*x is exact there.
inline HighPrec hp_sine_factor(int k, double x) {
  HighPrec y = HighPrec(k) * HighPrec(x);
  HighPrec r = y - 2 * floor(y / 2);  // r in [0, 2)
  HighPrec sign = 1;
  if (r > 1) {
    r -= 1;
    sign = -1;
  }
  if (r > HighPrec(0.5)) r = 1 - r;
  return sign * sqrt(HighPrec(2)) * sin(hp_pi() * r);
}

inline HighPrec hp_eval_mode(const EigenMode& mode, const Point& x) {
  HighPrec v = 1;
  for (std::size_t i = 0; i < x.size(); ++i) v *= hp_sine_factor(mode.index.k[i], x[i]);
  return v;
}

// Dense symmetric matrix in row-major order.
struct HpMatrix {
  std::size_t n = 0;
  std::vector<HighPrec> a;

  explicit HpMatrix(std::size_t size = 0) : n(size), a(size * size, HighPrec(0)) {}
  HighPrec& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const HighPrec& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// D = diag(e^{-2 lambda_j T}) and
// G_jk = sum_{x in omega} phi_j(x) phi_k(x) (1 - e^{-(lambda_j + lambda_k) T}) / (lambda_j + lambda_k),
// so that |u(T)|^2 = c.Dc and int_0^T sum_x |u(t,x)|^2 dt = c.Gc.
struct ObsGramian {
  double T = 0.0;
  std::vector<HighPrec> lambda;
  std::vector<HighPrec> d;
  HpMatrix G;
};

inline ObsGramian build_obs_gramian(const SpectrumSlice& slice, const PointSet& omega, double T) {
  if (slice.dimension != omega.dimension) throw ContractError("observability Gramian: dimension mismatch");
  if (!(T > 0)) throw DomainError("observability Gramian: T must be > 0");
  const std::size_t N = slice.size();
  ObsGramian g;
  g.T = T;
  g.G = HpMatrix(N);
  g.lambda.resize(N);
  g.d.resize(N);
  const HighPrec hT(T);
  for (std::size_t j = 0; j < N; ++j) {
    g.lambda[j] = HighPrec(slice.scale) * HighPrec(slice.modes[j].index.sum_of_squares());
    g.d[j] = exp(-2 * g.lambda[j] * hT);
  }
  std::vector<std::vector<HighPrec>> phi(omega.size(), std::vector<HighPrec>(N));
  for (std::size_t p = 0; p < omega.size(); ++p)
    for (std::size_t j = 0; j < N; ++j) phi[p][j] = hp_eval_mode(slice.modes[j], omega.points[p]);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = j; k < N; ++k) {
      const HighPrec s = g.lambda[j] + g.lambda[k];
      const HighPrec w = -boost::multiprecision::expm1(-s * hT) / s;
      HighPrec acc = 0;
      for (std::size_t p = 0; p < omega.size(); ++p) acc += phi[p][j] * phi[p][k];
      g.G(j, k) = acc * w;
      g.G(k, j) = g.G(j, k);
    }
  return g;
}

inline HighPrec hp_quadratic(const HpMatrix& A, const std::vector<HighPrec>& c) {
  HighPrec s = 0;
  for (std::size_t i = 0; i < A.n; ++i) {
    HighPrec row = 0;
    for (std::size_t j = 0; j < A.n; ++j) row += A(i, j) * c[j];
    s += c[i] * row;
  }
  return s;
}

// (c.Dc) / (c.Gc), evaluated in extended precision.
inline HighPrec rayleigh_quotient(const ObsGramian& g, const std::vector<HighPrec>& c) {
  HighPrec num = 0;
  for (std::size_t j = 0; j < c.size(); ++j) num += g.d[j] * c[j] * c[j];
  return num / hp_quadratic(g.G, c);
}

enum class ObsStatus { finite, infinite_singular };
enum class ObsMethod { ratio_measured, gen_eig };

inline const char* to_string(ObsStatus s) { return s == ObsStatus::finite ? "finite" : "infinite_singular"; }
inline const char* to_string(ObsMethod m) { return m == ObsMethod::gen_eig ? "gen_eig" : "ratio_measured"; }

struct ObsConstant {
  ObsStatus status = ObsStatus::finite;
  ObsMethod method = ObsMethod::gen_eig;
  double value = 0.0;  // +inf when singular
  std::vector<HighPrec> witness_hp;
  CoefVec witness;  // double rounding of witness_hp; see witness_hp for exact ratios
  double min_relative_pivot = 0.0;
  double singular_tol = 0.0;
};

inline constexpr double kDefaultGramianSingularTol = 1e-70;

// Largest generalized eigenvalue of the pencil (D, G), i.e. the worst ratio
// |u(T)|^2 / int_0^T sum_x |u|^2 over the slice.
inline ObsConstant solve_worst_case(const ObsGramian& g, double singular_tol = kDefaultGramianSingularTol) {
  const std::size_t N = g.G.n;
  if (N == 0) throw ContractError("worst_case_obs: empty slice");
  ObsConstant out;
  out.method = ObsMethod::gen_eig;
  out.singular_tol = singular_tol;

  HighPrec max_diag = 0;
  for (std::size_t j = 0; j < N; ++j) max_diag = std::max(max_diag, g.G(j, j));
  const HighPrec pivot_floor = max_diag * HighPrec(singular_tol);

  HpMatrix L(N);
  HighPrec min_pivot = max_diag;
  for (std::size_t j = 0; j < N; ++j) {
    HighPrec p = g.G(j, j);
    for (std::size_t k = 0; k < j; ++k) p -= L(j, k) * L(j, k);
    min_pivot = std::min(min_pivot, p);
    if (max_diag == 0 || p <= pivot_floor) {
      // G-null direction: c = [-L11^{-T} l; 1, 0...] with l the partial row j.
      std::vector<HighPrec> l(j);
      for (std::size_t k = 0; k < j; ++k) l[k] = L(j, k);
      std::vector<HighPrec> c(N, HighPrec(0));
      c[j] = 1;
      for (std::size_t k = j; k-- > 0;) {
        HighPrec s = -l[k];
        for (std::size_t q = k + 1; q < j; ++q) s -= L(q, k) * c[q];
        c[k] = s / L(k, k);
      }
      HighPrec nrm = 0;
      for (const auto& v : c) nrm += v * v;
      nrm = sqrt(nrm);
      for (auto& v : c) v /= nrm;
      out.status = ObsStatus::infinite_singular;
      out.value = kInf;
      out.witness_hp = std::move(c);
      out.min_relative_pivot = max_diag == 0 ? 0.0 : static_cast<double>(p / max_diag);
      out.witness = CoefVec(static_cast<Eigen::Index>(N));
      for (std::size_t q = 0; q < N; ++q) out.witness(static_cast<Eigen::Index>(q)) = static_cast<double>(out.witness_hp[q]);
      return out;
    }
    L(j, j) = sqrt(p);
    for (std::size_t i = j + 1; i < N; ++i) {
      HighPrec s = g.G(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  out.min_relative_pivot = static_cast<double>(min_pivot / max_diag);

  // W = L^{-1} D^{1/2}: column q is the forward solve of sqrt(d_q) e_q.
  HpMatrix W(N);
  for (std::size_t q = 0; q < N; ++q) {
    const HighPrec rhs = sqrt(g.d[q]);
    for (std::size_t i = q; i < N; ++i) {
      HighPrec s = i == q ? rhs : HighPrec(0);
      for (std::size_t k = q; k < i; ++k) s -= L(i, k) * W(k, q);
      W(i, q) = s / L(i, i);
    }
  }
  // M = W^T W = D^{1/2} G^{-1} D^{1/2}; its top eigenpair is well conditioned.
  Eigen::MatrixXd M(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a; b < N; ++b) {
      HighPrec s = 0;
      for (std::size_t i = std::max(a, b); i < N; ++i) s += W(i, a) * W(i, b);
      M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = static_cast<double>(s);
      M(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = static_cast<double>(s);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::VectorXd y = es.eigenvectors().col(static_cast<Eigen::Index>(N) - 1);

  // c = G^{-1} D^{1/2} y = L^{-T} (W y).
  std::vector<HighPrec> z(N, HighPrec(0)), c(N, HighPrec(0));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t q = 0; q <= i; ++q) z[i] += W(i, q) * HighPrec(y(static_cast<Eigen::Index>(q)));
  for (std::size_t i = N; i-- > 0;) {
    HighPrec s = z[i];
    for (std::size_t k = i + 1; k < N; ++k) s -= L(k, i) * c[k];
    c[i] = s / L(i, i);
  }
  out.status = ObsStatus::finite;
  out.value = static_cast<double>(rayleigh_quotient(g, c));
  out.witness_hp = std::move(c);
  out.witness = CoefVec(static_cast<Eigen::Index>(N));
  for (std::size_t q = 0; q < N; ++q) out.witness(static_cast<Eigen::Index>(q)) = static_cast<double>(out.witness_hp[q]);
  return out;
}

inline ObsConstant worst_case_obs(const SpectrumSlice& slice, const PointSet& omega, double T,
                                  double singular_tol = kDefaultGramianSingularTol) {
  return solve_worst_case(build_obs_gramian(slice, omega, T), singular_tol);
}

}  // namespace heatscope
