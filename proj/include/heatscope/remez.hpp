#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatscope/eigenbasis.hpp"
#include "heatscope/errors.hpp"
#include "heatscope/numeric.hpp"
#include "heatscope/pointsets.hpp"

namespace heatscope {

// Derivative bounds sup|f^(l)| <= M_l sup|f|, stored as l -> log M_l.
struct DerivBoundSeq {
  std::string rule;
  std::function<double(int)> log_bound;

  double log_at(int l) const { return log_bound(l); }

  // M_l = (C K)^l, the Bernstein bound for sine sums of top frequency K.
  static DerivBoundSeq bernstein(int K, double C = kPi) {
    if (K < 0) throw DomainError("bernstein: K must be >= 0");
    const double lck = K == 0 ? -kInf : std::log(C * K);
    return {"bernstein(C=" + std::to_string(C) + ", K=" + std::to_string(K) + ")", [lck](int l) {
              return l == 0 ? 0.0 : l * lck;
            }};
  }

  static DerivBoundSeq constant(double value) {
    if (!(value >= 0)) throw DomainError("constant bound must be >= 0");
    const double lv = value == 0 ? -kInf : std::log(value);
    return {"constant(" + std::to_string(value) + ")", [lv](int l) { return l == 0 ? 0.0 : lv; }};
  }
};

// Smallest l0 in [1, l_max] with M_l0 / l0! <= 1/2.
inline std::optional<int> choose_ell0(const DerivBoundSeq& M, int l_max) {
  if (l_max < 1) throw DomainError("choose_ell0: l_max must be >= 1");
  const double target = std::log(0.5) + 1e-12;
  for (int l = 1; l <= l_max; ++l)
    if (M.log_at(l) - std::lgamma(l + 1.0) <= target) return l;
  return std::nullopt;
}

inline double lagrange_interp(std::span<const double> nodes, std::span<const double> values, double x) {
  if (nodes.size() != values.size() || nodes.empty()) throw ContractError("lagrange_interp: bad node/value arrays");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[i] == nodes[j]) throw DomainError("lagrange_interp: coincident nodes");
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double w = values[i];
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (j != i) w *= (x - nodes[j]) / (nodes[i] - nodes[j]);
    s += w;
  }
  return s;
}

// Everything in a certificate that depends only on (K, E): reusable across
// many coefficient draws.
struct RemezPlan {
  int K = 0;
  int ell0 = 1;
  std::string rule;
  std::vector<double> nodes;
  double log_gamma = 0.0;
  GammaMethod gamma_method = GammaMethod::exact;
  double log_factor = 0.0;  // log(4 l0 / gamma_l0)
};

inline RemezPlan remez_plan(int K, const PointSet& E, double budget = kDefaultSubsetBudget) {
  if (E.dimension != 1) throw ContractError("remez_plan: observation set must be one-dimensional");
  RemezPlan plan;
  plan.K = K;
  const DerivBoundSeq M = DerivBoundSeq::bernstein(K);
  plan.rule = M.rule;
  const auto l0 = choose_ell0(M, 1'000'000);
  if (!l0) throw ContractError("remez_plan: no admissible l0 for " + M.rule);
  plan.ell0 = *l0;
  if (E.size() < static_cast<std::size_t>(plan.ell0))
    throw ContractError("remez_plan: |E| = " + std::to_string(E.size()) + " but " + M.rule + " requires " +
                        std::to_string(plan.ell0) + " nodes");
  if (plan.ell0 == 1) {
    plan.nodes = {E.points.front()[0]};
    plan.log_gamma = 0.0;  // empty product
  } else {
    const GammaEstimate g = gamma_auto(E, plan.ell0, budget);
    plan.nodes = g.witness_points;
    plan.log_gamma = g.log_value;
    plan.gamma_method = g.method;
  }
  plan.log_factor = std::log(4.0 * plan.ell0) - plan.log_gamma;
  return plan;
}

struct RemezCertificate {
  RemezPlan plan;
  std::size_t grid_size = 0;
  double lhs = 0.0;            // max |f| on the uniform grid
  double lhs_corrected = 0.0;  // grid max inflated by the Bernstein resolution term
  double sup_on_E = 0.0;
  double rhs = 0.0;  // factor * sup_E |f|; may be +inf
  bool holds = false;

  double factor() const { return std::exp(plan.log_factor); }
};

namespace detail {

inline double eval_1d(const SpectrumSlice& slice, const CoefVec& c, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < slice.size(); ++j)
    s += c[static_cast<Eigen::Index>(j)] * std::sqrt(2.0) * sin_pi(slice.modes[j].index.k[0] * x);
  return s;
}

}  // namespace detail

inline RemezCertificate remez_verify(const RemezPlan& plan, const SpectrumSlice& slice, const CoefVec& c,
                                     const PointSet& E, std::size_t grid_size) {
  if (slice.dimension != 1) throw ContractError("remez_verify: slice must be one-dimensional");
  if (static_cast<std::size_t>(c.size()) != slice.size()) throw ContractError("remez_verify: misaligned coefficients");
  if (plan.K < slice.max_frequency()) throw ContractError("remez_verify: plan built for a lower frequency");
  if (grid_size < 2) throw DomainError("remez_verify: grid_size must be >= 2");

  RemezCertificate cert;
  cert.plan = plan;
  cert.grid_size = grid_size;
  const double h = 1.0 / static_cast<double>(grid_size - 1);
  for (std::size_t i = 0; i < grid_size; ++i)
    cert.lhs = std::max(cert.lhs, std::abs(detail::eval_1d(slice, c, static_cast<double>(i) * h)));
  const double shrink = 1.0 - 0.5 * h * kPi * plan.K;
  cert.lhs_corrected = shrink > 0 ? cert.lhs / shrink : kInf;
  for (const auto& p : E.points) cert.sup_on_E = std::max(cert.sup_on_E, std::abs(detail::eval_1d(slice, c, p[0])));
  cert.rhs = cert.sup_on_E == 0 ? 0.0 : std::exp(plan.log_factor + std::log(cert.sup_on_E));
  cert.holds = cert.lhs_corrected <= cert.rhs;
  return cert;
}

inline RemezCertificate remez_verify(const SpectrumSlice& slice, const CoefVec& c, const PointSet& E,
                                     std::size_t grid_size, double budget = kDefaultSubsetBudget) {
  return remez_verify(remez_plan(slice.max_frequency(), E, budget), slice, c, E, grid_size);
}

}  // namespace heatscope
