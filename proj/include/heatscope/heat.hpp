#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "heatscope/eigenbasis.hpp"
#include "heatscope/errors.hpp"
#include "heatscope/numeric.hpp"
#include "heatscope/obs_gramian.hpp"
#include "heatscope/pointsets.hpp"
#include "heatscope/spectral.hpp"

namespace heatscope {

using SlicePtr = std::shared_ptr<const SpectrumSlice>;

struct HeatState {
  SlicePtr slice;
  CoefVec coefs;
  double time = 0.0;
};

inline HeatState make_heat_state(SlicePtr slice, CoefVec coefs, double time = 0.0) {
  if (!slice) throw ContractError("HeatState: null slice");
  if (static_cast<std::size_t>(coefs.size()) != slice->size()) throw ContractError("HeatState: misaligned coefficients");
  if (!(time >= 0)) throw DomainError("HeatState: time must be >= 0");
  return {std::move(slice), std::move(coefs), time};
}

// Exact propagation: coefficient j is damped by e^{-lambda_j dt}.
inline HeatState evolve(const HeatState& s, double dt) {
  if (!(dt >= 0)) throw DomainError("evolve: time step must be >= 0");
  HeatState out = s;
  for (std::size_t j = 0; j < s.slice->size(); ++j)
    out.coefs[static_cast<Eigen::Index>(j)] *= std::exp(-s.slice->modes[j].eigenvalue * dt);
  out.time = s.time + dt;
  return out;
}

inline CoefVec damp(const SpectrumSlice& slice, const CoefVec& c, double t) {
  CoefVec out = c;
  for (std::size_t j = 0; j < slice.size(); ++j) out[static_cast<Eigen::Index>(j)] *= std::exp(-slice.modes[j].eigenvalue * t);
  return out;
}

// Uniform nodes on [0,T] with the first cell refined geometrically toward 0,
// where e^{-lambda t} concentrates for large lambda.
inline std::vector<double> make_time_grid(double T, std::size_t intervals, int geometric_levels = 0) {
  if (!(T > 0)) throw DomainError("make_time_grid: T must be > 0");
  if (intervals < 1) throw DomainError("make_time_grid: need at least one interval");
  std::vector<double> t;
  const double h = T / static_cast<double>(intervals);
  t.push_back(0.0);
  for (int l = geometric_levels; l >= 1; --l) t.push_back(std::ldexp(h, -l));
  for (std::size_t i = 1; i < intervals; ++i) t.push_back(h * static_cast<double>(i));
  t.push_back(T);
  return t;
}

enum class NormKind { l2_terminal, linf_terminal };
enum class TraceKind { sup_l1, l2_sum };

struct ObsExperiment {
  double T = 1.0;
  PointSet omega;
  SlicePtr slice;
  std::vector<double> time_grid;
  NormKind norm = NormKind::l2_terminal;
  TraceKind trace = TraceKind::sup_l1;
  std::size_t linf_grid = 2048;  // per axis
};

inline ObsExperiment make_experiment(double T, PointSet omega, SlicePtr slice, std::vector<double> grid,
                                     NormKind norm = NormKind::l2_terminal, TraceKind trace = TraceKind::sup_l1) {
  if (!(T > 0)) throw DomainError("ObsExperiment: T must be > 0");
  if (!slice) throw ContractError("ObsExperiment: null slice");
  if (slice->dimension != omega.dimension) throw ContractError("ObsExperiment: dimension mismatch");
  if (grid.size() < 2) throw ContractError("ObsExperiment: time grid needs two nodes");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0 || grid[i] > T) throw ContractError("ObsExperiment: time grid leaves [0,T]");
    if (i > 0 && grid[i] < grid[i - 1]) throw ContractError("ObsExperiment: time grid must be sorted");
  }
  return {T, std::move(omega), std::move(slice), std::move(grid), norm, trace};
}

// Sup of |u| over [0,1]^n sampled on a per-axis grid, plus the inflated bound
// grid_max / (1 - (h/2) pi sum_i K_i) from the per-axis Bernstein inequality.
struct LinfEstimate {
  double grid_max = 0.0;
  double upper_bound = kInf;
};

inline LinfEstimate linf_norm(const SpectrumSlice& slice, const CoefVec& c, std::size_t per_axis) {
  const int n = slice.dimension;
  if (per_axis < 2) throw DomainError("linf_norm: need at least two grid points per axis");
  double total = 1.0;
  for (int a = 0; a < n; ++a) total *= static_cast<double>(per_axis);
  if (total > 5e7) throw ResourceError("linf_norm: grid of " + std::to_string(total) + " points is too large");
  const double h = 1.0 / static_cast<double>(per_axis - 1);

  // Per-axis tables sqrt(2) sin(pi k x_g) for each mode.
  const std::size_t N = slice.size();
  std::vector<std::vector<std::vector<double>>> tab(static_cast<std::size_t>(n), std::vector<std::vector<double>>(N));
  for (int a = 0; a < n; ++a)
    for (std::size_t j = 0; j < N; ++j) {
      auto& row = tab[static_cast<std::size_t>(a)][j];
      row.resize(per_axis);
      for (std::size_t g = 0; g < per_axis; ++g)
        row[g] = std::sqrt(2.0) * sin_pi(slice.modes[j].index.k[static_cast<std::size_t>(a)] * (static_cast<double>(g) * h));
    }

  LinfEstimate est;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  const auto count = static_cast<std::size_t>(total);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    for (int a = n - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = rem % per_axis;
      rem /= per_axis;
    }
    double v = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      double term = c[static_cast<Eigen::Index>(j)];
      for (int a = 0; a < n; ++a) term *= tab[static_cast<std::size_t>(a)][j][idx[static_cast<std::size_t>(a)]];
      v += term;
    }
    est.grid_max = std::max(est.grid_max, std::abs(v));
  }
  double ksum = 0.0;
  for (int a = 0; a < n; ++a) ksum += slice.max_frequency(static_cast<std::size_t>(a));
  const double shrink = 1.0 - 0.5 * h * kPi * ksum;
  est.upper_bound = shrink > 0 ? est.grid_max / shrink : kInf;
  return est;
}

struct ObsRatio {
  double numerator = 0.0;
  double denominator = 0.0;
  double envelope = 0.0;  // denominator without cancellation between modes
  double ratio = 0.0;
  bool infinite = false;
  std::optional<double> linf_upper;  // for NormKind::linf_terminal
};

inline constexpr double kZeroTraceRelTol = 1e-12;

// Observability ratio of one solution. sup_l1: ||u(T)|| / int sup_omega |u|.
// l2_sum: ||u(T)||^2 / int sum_omega |u|^2 (matches worst_case_obs).
inline ObsRatio obs_ratio(const CoefVec& u0, const ObsExperiment& ex) {
  const SpectrumSlice& slice = *ex.slice;
  if (static_cast<std::size_t>(u0.size()) != slice.size()) throw ContractError("obs_ratio: misaligned initial data");
  if (u0.size() == 0 || u0.cwiseAbs().maxCoeff() == 0) throw ContractError("obs_ratio: initial data must be nonzero");

  ObsRatio r;
  const CoefVec uT = damp(slice, u0, ex.T);
  if (ex.norm == NormKind::l2_terminal) {
    r.numerator = uT.norm();
  } else {
    const LinfEstimate e = linf_norm(slice, uT, ex.linf_grid);
    r.numerator = e.grid_max;
    r.linf_upper = e.upper_bound;
  }
  if (ex.trace == TraceKind::l2_sum) r.numerator *= r.numerator;

  const EvalMatrix Phi = eval_matrix(slice, ex.omega);
  const Eigen::MatrixXd absPhi = Phi.cwiseAbs();
  std::vector<double> f(ex.time_grid.size()), env(ex.time_grid.size());
  for (std::size_t i = 0; i < ex.time_grid.size(); ++i) {
    const CoefVec ct = damp(slice, u0, ex.time_grid[i]);
    const Eigen::VectorXd vals = Phi * ct;
    const Eigen::VectorXd bound = absPhi * ct.cwiseAbs();
    if (ex.trace == TraceKind::sup_l1) {
      f[i] = vals.cwiseAbs().maxCoeff();
      env[i] = bound.maxCoeff();
    } else {
      f[i] = vals.squaredNorm();
      env[i] = bound.squaredNorm();
    }
  }
  r.denominator = trapezoid(ex.time_grid, f);
  r.envelope = trapezoid(ex.time_grid, env);
  const double rel = ex.trace == TraceKind::sup_l1 ? kZeroTraceRelTol : kZeroTraceRelTol * kZeroTraceRelTol;
  r.infinite = r.denominator <= 1e-300 || r.denominator <= rel * r.envelope;
  r.ratio = r.infinite ? kInf : r.numerator / r.denominator;
  return r;
}

// ---------------------------------------------------------------------------
// Lebeau-Robbiano time schedules.

enum class ScheduleVariant { dyadic, geometric };

struct LRSchedule {
  ScheduleVariant variant = ScheduleVariant::dyadic;
  double T = 0.0;
  double alpha = 0.0;  // geometric only
  double eta = 0.0;    // geometric only, 2^{-1/alpha}
  double limit = 0.0;  // dyadic: l = T/2; geometric: 0
  std::vector<double> times;  // dyadic: l_1, l_2, ...; geometric: T_0, T_1, ...
  std::vector<double> offsets;  // dyadic only: times - limit, exact powers of two times l_1 - limit
};

inline LRSchedule lr_schedule(ScheduleVariant variant, double T, double alpha = 1.0, int count = 40) {
  if (!(T > 0)) throw DomainError("lr_schedule: T must be > 0");
  if (count < 2) throw DomainError("lr_schedule: need at least two times");
  LRSchedule s;
  s.variant = variant;
  s.T = T;
  if (variant == ScheduleVariant::dyadic) {
    s.limit = T / 2;
    const double l1 = 3 * T / 4;
    // l_{m+1} - l = 2^{-m} (l_1 - l)
    for (int m = 0; m < count; ++m) {
      s.offsets.push_back(std::ldexp(l1 - s.limit, -m));
      s.times.push_back(s.limit + s.offsets.back());
    }
  } else {
    if (!(alpha > 0)) throw DomainError("lr_schedule: alpha must be > 0");
    s.alpha = alpha;
    s.eta = std::pow(2.0, -1.0 / alpha);
    s.limit = 0.0;
    double Tk = T;
    s.times.push_back(Tk);
    for (int k = 0; k + 1 < count; ++k) {
      Tk -= (1 - s.eta) * std::pow(s.eta, k) * T;
      s.times.push_back(Tk);
    }
  }
  return s;
}

// Cost prediction C' exp(C' / T^alpha) from a spectral fit with beta in (0,1).
struct CostPrediction {
  double beta = 0.0;
  double alpha = 0.0;
  double identity_error = 0.0;  // |beta (alpha + 1) - alpha|
  double C1 = 0.0;              // observability constant of the factor (or fit C)
  double C3 = 0.0;              // low-frequency constant (fit C)
  double gamma = 0.0;           // root of gamma = 10 (C1 + C3 gamma^beta)
  double eta = 0.0;             // 2^{-1/alpha}
  double C_prime = 0.0;         // max(1, gamma / (10 (1 - eta)^alpha))
  std::string note;

  double operator()(double T) const { return C_prime * std::exp(C_prime / std::pow(T, alpha)); }
  double log_at(double T) const { return std::log(C_prime) + C_prime / std::pow(T, alpha); }
  // Frequency split Lambda = gamma / tau^{alpha+1} used at elapsed time tau.
  double frequency_split(double tau) const { return gamma / std::pow(tau, alpha + 1); }
};

inline CostPrediction lr_predict_cost(const SpectralFit& fit, std::optional<double> C1 = std::nullopt) {
  const double beta = fit.beta;
  if (!(beta > 0) || !(beta < 1)) throw ContractError("lr_predict_cost: the method needs beta in (0,1)");
  CostPrediction p;
  p.beta = beta;
  p.alpha = beta / (1 - beta);
  p.identity_error = std::abs(beta * (p.alpha + 1) - p.alpha);
  if (p.identity_error > 1e-14 * std::max(1.0, p.alpha)) throw ContractError("lr_predict_cost: beta (alpha + 1) = alpha violated");
  p.C1 = C1.value_or(fit.C);
  p.C3 = fit.C;
  auto h = [&](double g) { return g - 10 * (p.C1 + p.C3 * std::pow(g, beta)); };
  double lo = 0.0, hi = 1.0;
  while (h(hi) < 0) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 0 ? lo : hi) = mid;
  }
  p.gamma = hi;
  p.eta = std::pow(2.0, -1.0 / p.alpha);
  p.C_prime = std::max(1.0, p.gamma / (10 * std::pow(1 - p.eta, p.alpha)));
  p.note = "C' = max(1, gamma / (10 (1 - eta)^alpha)); gamma solves gamma = 10 (C1 + C3 gamma^beta)";
  return p;
}

// ---------------------------------------------------------------------------
// Two-point telescoping inequality on the dyadic schedule (C = 1):
//   e^{-A/d} ||u(t2)|| - e^{-2A/d} ||u(t1)|| <= int_{t1}^{t2} sup_omega |u|,  d = t2 - t1.

struct IntervalData {
  double t1 = 0.0, t2 = 0.0;
  double norm1 = 0.0, norm2 = 0.0;  // ||u(t1)||, ||u(t2)||
  double trace = 0.0;               // int_{t1}^{t2} sup_omega |u|
};

// Evaluated in log space so underflow of e^{-A/d} cannot fake a pass.
inline bool two_point_holds(const IntervalData& iv, double A) {
  const double d = iv.t2 - iv.t1;
  const double a = A / d;
  const double inner = iv.norm2 - std::exp(-a) * iv.norm1;
  if (inner <= 0) return true;
  if (iv.trace <= 0) return false;
  return -a + std::log(inner) <= std::log(iv.trace);
}

struct TelescopingReport {
  std::optional<double> A;  // empty: no finite A in [1e-3, 1e3]
  double final_constant = kInf;   // e^{A / (l_1 - l_2)}
  double linf_factor = 1.0;       // T^{-n/4}, reported separately
  std::vector<double> lhs, rhs;   // ||u(l_1)|| and final_constant * int_0^T sup_omega |u|
  bool telescoped_holds = false;
  bool non_observable = false;
  std::size_t intervals = 0;
};

struct TelescopingOptions {
  int intervals = 24;
  std::size_t nodes_per_interval = 256;
  double A_lo = 1e-3, A_hi = 1e3;
  int bisection_steps = 60;
};

inline double sup_trace_integral(const SpectrumSlice& slice, const EvalMatrix& Phi, const CoefVec& u0, double t1,
                                 double t2, std::size_t nodes) {
  std::vector<double> t(nodes), f(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    t[i] = t1 + (t2 - t1) * static_cast<double>(i) / static_cast<double>(nodes - 1);
    f[i] = (Phi * damp(slice, u0, t[i])).cwiseAbs().maxCoeff();
  }
  return trapezoid(t, f);
}

inline TelescopingReport telescoping_verify(const SpectrumSlice& slice, const PointSet& omega, double T,
                                            const std::vector<CoefVec>& panel, const TelescopingOptions& opt = {}) {
  if (panel.empty()) throw ContractError("telescoping_verify: empty panel of initial data");
  const LRSchedule sched = lr_schedule(ScheduleVariant::dyadic, T, 1.0, opt.intervals + 1);
  const EvalMatrix Phi = eval_matrix(slice, omega);

  std::vector<IntervalData> data;
  for (const CoefVec& u0 : panel) {
    if (static_cast<std::size_t>(u0.size()) != slice.size()) throw ContractError("telescoping_verify: misaligned datum");
    for (int m = 0; m + 1 < static_cast<int>(sched.times.size()); ++m) {
      IntervalData iv;
      iv.t2 = sched.times[static_cast<std::size_t>(m)];
      iv.t1 = sched.times[static_cast<std::size_t>(m) + 1];
      iv.norm2 = damp(slice, u0, iv.t2).norm();
      iv.norm1 = damp(slice, u0, iv.t1).norm();
      iv.trace = sup_trace_integral(slice, Phi, u0, iv.t1, iv.t2, opt.nodes_per_interval);
      data.push_back(iv);
    }
  }
  auto all_hold = [&](double A) {
    return std::all_of(data.begin(), data.end(), [A](const IntervalData& iv) { return two_point_holds(iv, A); });
  };

  TelescopingReport rep;
  rep.intervals = sched.times.size() - 1;
  rep.linf_factor = std::pow(T, -slice.dimension / 4.0);
  if (!all_hold(opt.A_hi)) {
    rep.non_observable = true;
    return rep;
  }
  double A = opt.A_lo;
  if (!all_hold(opt.A_lo)) {
    double lo = std::log(opt.A_lo), hi = std::log(opt.A_hi);
    for (int s = 0; s < opt.bisection_steps; ++s) {
      const double mid = 0.5 * (lo + hi);
      (all_hold(std::exp(mid)) ? hi : lo) = mid;
    }
    A = std::exp(hi);
  }
  rep.A = A;
  const double l1 = sched.times[0], l2 = sched.times[1];
  rep.final_constant = std::exp(A / (l1 - l2));
  const std::vector<double> grid = make_time_grid(T, 4096, 20);
  rep.telescoped_holds = true;
  for (const CoefVec& u0 : panel) {
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = (Phi * damp(slice, u0, grid[i])).cwiseAbs().maxCoeff();
    const double lhs = damp(slice, u0, l1).norm();
    const double rhs = rep.final_constant * trapezoid(grid, f);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    if (!(lhs <= rhs)) rep.telescoped_holds = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Observability on a product box from an observability estimate on the first
// factor and a spectral fit on the second.

struct FactorObsSample {
  double tau = 0.0;
  double value = 0.0;  // worst-case ratio on factor 1 at horizon tau
};

// Smallest C with value <= C exp(C / tau^alpha) at every sample.
inline double fit_cost_constant(const std::vector<FactorObsSample>& samples, double alpha) {
  auto ok = [&](double C) {
    return std::all_of(samples.begin(), samples.end(), [&](const FactorObsSample& s) {
      return std::log(s.value) <= std::log(C) + C / std::pow(s.tau, alpha);
    });
  };
  double lo = 1e-12, hi = 1.0;
  while (!ok(hi)) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

struct ProductObsReport {
  double T = 0.0;
  double cutoff = 0.0;
  double alpha = 0.0;
  std::vector<FactorObsSample> factor1;
  bool inherited_infinite = false;
  std::optional<CostPrediction> prediction;
  double predicted = kInf;
  double log_predicted = kInf;
  ObsConstant measured;
  bool holds = false;
  double frequency_split = 0.0;  // gamma / T^{alpha+1}
};

inline ProductObsReport product_obs_check(const PointSet& omega1, const PointSet& omega2, const SpectralFit& fit2,
                                          double T, double cutoff, double scale,
                                          std::optional<double> factor1_alpha = std::nullopt) {
  if (!(fit2.beta > 0 && fit2.beta < 1)) throw ContractError("product_obs_check: beta must lie in (0,1)");
  ProductObsReport rep;
  rep.T = T;
  rep.cutoff = cutoff;
  rep.alpha = fit2.beta / (1 - fit2.beta);
  if (factor1_alpha && std::abs(*factor1_alpha - rep.alpha) > 1e-9 * std::max(1.0, rep.alpha))
    throw ContractError("product_obs_check: factor cost exponent " + std::to_string(*factor1_alpha) +
                        " does not match beta/(1-beta) = " + std::to_string(rep.alpha));

  const SpectrumSlice s1 = enumerate_modes(omega1.dimension, cutoff, scale);
  for (double frac : {0.25, 0.5, 1.0}) {
    const ObsConstant oc = worst_case_obs(s1, omega1, frac * T);
    rep.factor1.push_back({frac * T, oc.value});
    if (oc.status == ObsStatus::infinite_singular) rep.inherited_infinite = true;
  }
  const SpectrumSlice sp = enumerate_modes(omega1.dimension + omega2.dimension, cutoff, scale);
  rep.measured = worst_case_obs(sp, cartesian_product(omega1, omega2), T);
  if (rep.inherited_infinite) {
    rep.holds = rep.measured.status == ObsStatus::infinite_singular;
    return rep;
  }
  const double C1 = fit_cost_constant(rep.factor1, rep.alpha);
  rep.prediction = lr_predict_cost(fit2, C1);
  rep.predicted = (*rep.prediction)(T);
  rep.log_predicted = rep.prediction->log_at(T);
  rep.frequency_split = rep.prediction->frequency_split(T);
  rep.holds = rep.measured.status == ObsStatus::finite &&
              std::log(rep.measured.value) <= rep.log_predicted;
  return rep;
}

}  // namespace heatscope
