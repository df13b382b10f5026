#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "heatscope/cli/config.hpp"
#include "heatscope/cli/records.hpp"
#include "heatscope/diophantine.hpp"
#include "heatscope/eigenbasis.hpp"
#include "heatscope/heat.hpp"
#include "heatscope/obs_gramian.hpp"
#include "heatscope/pointsets.hpp"
#include "heatscope/remez.hpp"
#include "heatscope/rng.hpp"
#include "heatscope/spectral.hpp"

namespace heatscope::cli {

enum class ExitCode : int {
  ok = 0,
  internal = 1,
  usage = 2,
  invalid_config = 3,
  unknown_kind = 4,
  contract = 5,
  resource = 6,
  domain = 7,
  strict_tolerance = 8,
  io = 9,
};

enum class Format { csv, json, both };

struct StrictModeError : std::runtime_error {
  std::vector<std::string> warnings;
  explicit StrictModeError(std::vector<std::string> w)
      : std::runtime_error("strict mode: " + w.front()), warnings(std::move(w)) {}
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  unsigned threads = 1;
  Format format = Format::both;
  bool strict = false;
};

inline bool strict_from_env() {
  const char* m = std::getenv("HEATSCOPE_MODE");
  return m && std::string(m) == "strict";
}

struct RunResult {
  std::string kind;
  std::string hash;
  std::uint64_t seed = 0;
  CsvTable table;
  std::vector<std::pair<std::string, CsvTable>> extra_tables;  // file stem -> table
  Json records = Json::array();
  Json summary = Json::object();
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  // File name -> bytes. Timing lives in its own file so the rest is reproducible.
  std::map<std::string, std::string> render(Format f) const {
    std::map<std::string, std::string> files;
    if (f != Format::json) {
      files[kind + ".csv"] = table.render(hash, seed);
      for (const auto& [stem, t] : extra_tables) files[stem + ".csv"] = t.render(hash, seed);
    }
    if (f != Format::csv) {
      Json doc;
      doc["artifact_version"] = kArtifactVersion;
      doc["config_hash"] = hash;
      doc["seed"] = seed;
      doc["kind"] = kind;
      doc["records"] = records;
      doc["summary"] = summary;
      doc["warnings"] = warnings;
      files[kind + ".json"] = doc.dump(2) + "\n";
    }
    Json timing;
    timing["artifact_version"] = kArtifactVersion;
    timing["config_hash"] = hash;
    timing["seed"] = seed;
    timing["kind"] = kind;
    timing["wall_seconds"] = wall_seconds;
    files[kind + ".timing.json"] = timing.dump(2) + "\n";
    return files;
  }
};

// Evaluates fn(0..count-1) on up to `threads` workers; results come back in
// index order and the lowest-index exception wins, so output never depends on
// scheduling.
template <class Fn>
auto parallel_map(std::size_t count, unsigned threads, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t start, std::size_t stride) {
    for (std::size_t i = start; i < count; i += stride) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (t == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(work, w, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

namespace detail {

struct Context {
  const Json& cfg;
  std::uint64_t seed;
  unsigned threads;
  int n;
  double scale;

  double tol(const char* key, double fallback) const {
    if (cfg.contains("tolerances") && cfg["tolerances"].contains(key)) return cfg["tolerances"][key].get<double>();
    return fallback;
  }
  std::vector<double> list(const char* key) const { return cfg.at(key).get<std::vector<double>>(); }
  SpectralOptions spectral_options() const {
    SpectralOptions o;
    if (cfg.contains("tolerances") && cfg["tolerances"].contains("spectral_tol"))
      o.tol = cfg["tolerances"]["spectral_tol"].get<double>();
    o.starts = cfg.value("starts", o.starts);
    o.iterations = cfg.value("iterations", o.iterations);
    o.seed = mix64(seed ^ fnv1a64("spectral"));
    return o;
  }
};

inline CoefVec random_coefs(Rng& rng, std::size_t n) {
  CoefVec c(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) c[static_cast<Eigen::Index>(j)] = rng.normal();
  return c;
}

inline Json points_json(const PointSet& s) {
  Json a = Json::array();
  for (const auto& p : s.points) a.push_back(json_array(p));
  return a;
}

inline Json spectral_json(const SpectralConstant& sc) {
  Json j;
  j["cutoff"] = sc.cutoff;
  j["rows"] = sc.rows;
  j["cols"] = sc.cols;
  j["lower"] = json_number(sc.lower);
  j["upper"] = json_number(sc.upper);
  j["sigma_min"] = sc.sigma_min;
  j["tol"] = sc.tol;
  j["status"] = to_string(sc.status);
  j["witness"] = json_array(sc.witness);
  return j;
}

inline void run_gamma(const Context& cx, RunResult& res) {
  const PointSet E = build_point_set(cx.cfg, "omega", cx.seed);
  const int lo = cx.cfg["k_range"][0].get<int>(), hi = cx.cfg["k_range"][1].get<int>();
  const std::string method = cx.cfg.value("method", std::string("greedy"));
  const double budget = cx.cfg.value("budget", kDefaultSubsetBudget);
  const auto est = parallel_map(static_cast<std::size_t>(hi - lo + 1), cx.threads, [&](std::size_t i) {
    const int k = lo + static_cast<int>(i);
    if (method == "exact") return gamma_exact(E, k, budget);
    if (method == "auto") return gamma_auto(E, k, budget);
    return gamma_greedy_leja(E, k);
  });
  res.table.header = {"k", "log_gamma", "method", "witness_indices"};
  std::vector<double> xs, ys, ks2;
  for (const auto& g : est) {
    res.table.add({std::int64_t{g.k}, g.log_value, std::string(to_string(g.method)), join_indices(g.witness)});
    Json r;
    r["k"] = g.k;
    r["log_gamma"] = json_number(g.log_value);
    r["gamma"] = g.value() ? json_number(*g.value()) : Json("underflow");
    r["method"] = to_string(g.method);
    r["witness_indices"] = g.witness;
    r["witness_points"] = json_array(g.witness_points);
    res.records.push_back(r);
    xs.push_back(growth_abscissa(GrowthLaw::k_log_k, g.k));
    ks2.push_back(growth_abscissa(GrowthLaw::k_squared, g.k));
    ys.push_back(g.log_value);
  }
  res.summary["set_size"] = E.size();
  res.summary["generator"] = E.generator ? generator_tag(*E.generator) : "explicit";
  if (est.size() >= 3) {
    const LineFit a = fit_line(xs, ys), b = fit_line(ks2, ys);
    res.summary["fit_k_log_k"] = {{"slope", a.slope}, {"intercept", a.intercept}, {"residual", a.residual}};
    res.summary["fit_k_squared"] = {{"slope", b.slope}, {"intercept", b.intercept}, {"residual", b.residual}};
  }
}

inline void run_remez(const Context& cx, RunResult& res) {
  const PointSet E = build_point_set(cx.cfg, "omega", cx.seed);
  const auto cutoffs = cx.list("cutoffs");
  const int draws = cx.cfg["draws"].get<int>();
  const std::size_t grid = cx.cfg.value("grid", 10000);
  const double budget = cx.cfg.value("budget", kDefaultSubsetBudget);
  std::vector<SpectrumSlice> slices;
  std::vector<RemezPlan> plans;
  for (double L : cutoffs) {
    slices.push_back(enumerate_modes(1, L, cx.scale));
    if (slices.back().empty()) throw DomainError("remez: cutoff " + format_double(L) + " lies below the first eigenvalue");
    plans.push_back(remez_plan(slices.back().max_frequency(), E, budget));
  }
  const std::size_t total = cutoffs.size() * static_cast<std::size_t>(draws);
  const auto certs = parallel_map(total, cx.threads, [&](std::size_t i) {
    const std::size_t ci = i / static_cast<std::size_t>(draws);
    Rng rng = Rng::substream(cx.seed, "remez", i);
    return remez_verify(plans[ci], slices[ci], random_coefs(rng, slices[ci].size()), E, grid);
  });
  res.table.header = {"cutoff", "K", "ell0", "draw", "lhs", "lhs_corrected", "sup_on_E", "rhs", "holds"};
  std::size_t failures = 0;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& c = certs[i];
    const std::size_t ci = i / static_cast<std::size_t>(draws);
    res.table.add({cutoffs[ci], std::int64_t{c.plan.K}, std::int64_t{c.plan.ell0},
                   static_cast<std::int64_t>(i % static_cast<std::size_t>(draws)), c.lhs, c.lhs_corrected, c.sup_on_E,
                   c.rhs, std::string(c.holds ? "true" : "false")});
    if (!c.holds) ++failures;
    if (!std::isfinite(c.lhs_corrected))
      res.warnings.push_back("remez: grid of " + std::to_string(grid) + " points too coarse for the resolution margin at K=" +
                             std::to_string(c.plan.K));
  }
  for (std::size_t ci = 0; ci < plans.size(); ++ci) {
    Json r;
    r["cutoff"] = cutoffs[ci];
    r["K"] = plans[ci].K;
    r["ell0"] = plans[ci].ell0;
    r["rule"] = plans[ci].rule;
    r["nodes"] = json_array(plans[ci].nodes);
    r["log_gamma"] = plans[ci].log_gamma;
    r["gamma_method"] = to_string(plans[ci].gamma_method);
    r["log_factor"] = plans[ci].log_factor;
    res.records.push_back(r);
  }
  res.summary["draws"] = total;
  res.summary["failures"] = failures;
  res.summary["grid"] = grid;
}

inline void run_spectral(const Context& cx, RunResult& res) {
  const PointSet omega = build_point_set(cx.cfg, "omega", cx.seed);
  const auto cutoffs = cx.list("cutoffs");
  const SpectralOptions opt = cx.spectral_options();
  const auto out = parallel_map(cutoffs.size(), cx.threads, [&](std::size_t i) {
    const SpectrumSlice s = enumerate_modes(cx.n, cutoffs[i], cx.scale);
    if (s.empty()) throw DomainError("spectral: cutoff " + format_double(cutoffs[i]) + " lies below the first eigenvalue");
    return spectral_constant(s, omega, opt);
  });
  res.table.header = {"cutoff", "modes", "points", "sigma_min", "lower", "upper", "status"};
  std::vector<double> fc, fv;
  bool all_finite = true;
  for (const auto& sc : out) {
    res.table.add({sc.cutoff, static_cast<std::int64_t>(sc.cols), static_cast<std::int64_t>(sc.rows), sc.sigma_min,
                   sc.lower, sc.upper, std::string(to_string(sc.status))});
    res.records.push_back(spectral_json(sc));
    if (sc.status == SpectralStatus::finite && std::isfinite(sc.lower)) {
      const double check = witness_ratio(eval_matrix(enumerate_modes(cx.n, sc.cutoff, cx.scale), omega), sc.witness);
      if (std::abs(check - sc.lower) > cx.tol("witness_rel", 1e-10) * sc.lower)
        res.warnings.push_back("spectral: witness ratio at cutoff " + format_double(sc.cutoff) + " misses lower bound");
    }
    all_finite = all_finite && sc.status == SpectralStatus::finite;
    fc.push_back(sc.cutoff);
    fv.push_back(sc.upper);
  }
  res.summary["starts"] = opt.starts;
  res.summary["iterations"] = opt.iterations;
  res.summary["seed_spectral"] = opt.seed;
  if (out.size() >= 3 && all_finite) {
    const SpectralFit f = fit_growth(fc, fv);
    res.summary["fit_upper"] = {{"C", f.C}, {"beta", f.beta}, {"residual", f.residual}};
  }
}

inline void run_product_spectral(const Context& cx, RunResult& res) {
  const PointSet w1 = build_point_set(cx.cfg, "omega", cx.seed);
  const PointSet w2 = build_point_set(cx.cfg, "omega2", cx.seed);
  const auto cutoffs = cx.list("cutoffs");
  const SpectralOptions opt = cx.spectral_options();
  const auto reps = parallel_map(cutoffs.size(), cx.threads, [&](std::size_t i) {
    return product_compose_check(cutoffs[i], cx.scale, w1, w2, std::nullopt, opt);
  });
  res.table.header = {"cutoff", "modes_factor1", "modes_factor2", "modes_product", "product_lower", "composed_bound",
                      "weyl_factor", "holds", "inherited_infinite"};
  std::size_t fails = 0;
  for (const auto& r : reps) {
    res.table.add({r.cutoff, static_cast<std::int64_t>(r.modes_factor1), static_cast<std::int64_t>(r.modes_factor2),
                   static_cast<std::int64_t>(r.modes_product), r.product.lower, r.composed_bound, r.weyl_factor,
                   std::string(r.holds ? "true" : "false"), std::string(r.inherited_infinite ? "true" : "false")});
    Json j;
    j["cutoff"] = r.cutoff;
    j["factor1"] = spectral_json(r.factor1);
    j["factor2"] = spectral_json(r.factor2);
    j["product"] = spectral_json(r.product);
    j["weyl_factor"] = r.weyl_factor;
    j["composed_bound"] = json_number(r.composed_bound);
    j["holds"] = r.holds;
    j["inherited_infinite"] = r.inherited_infinite;
    res.records.push_back(j);
    if (!r.holds) ++fails;
  }
  res.summary["violations"] = fails;
}

inline void run_heat_obs(const Context& cx, RunResult& res) {
  const PointSet omega = build_point_set(cx.cfg, "omega", cx.seed);
  const auto cutoffs = cx.list("cutoffs");
  const auto Ts = cx.list("T");
  const int draws = cx.cfg["draws"].get<int>();
  const NormKind norm = cx.cfg.value("norm", std::string("l2")) == "linf" ? NormKind::linf_terminal : NormKind::l2_terminal;
  const TraceKind trace = cx.cfg.value("trace", std::string("sup_l1")) == "l2_sum" ? TraceKind::l2_sum : TraceKind::sup_l1;
  const std::size_t intervals = cx.cfg.value("time_intervals", 2048);
  const std::size_t linf_grid = cx.cfg.value("linf_grid", 2048);
  const double refine_tol = cx.tol("quadrature_rel_change", 1e-3);

  std::vector<SlicePtr> slices;
  for (double L : cutoffs) {
    auto s = std::make_shared<const SpectrumSlice>(enumerate_modes(cx.n, L, cx.scale));
    if (s->empty()) throw DomainError("heat_obs: cutoff " + format_double(L) + " lies below the first eigenvalue");
    slices.push_back(s);
  }
  struct Row {
    double cutoff, T;
    int draw;
    ObsRatio r;
    double refine;
  };
  const std::size_t per_cut = Ts.size() * static_cast<std::size_t>(draws);
  const auto rows = parallel_map(cutoffs.size() * per_cut, cx.threads, [&](std::size_t i) {
    const std::size_t ci = i / per_cut, ti = (i % per_cut) / static_cast<std::size_t>(draws);
    const int d = static_cast<int>(i % static_cast<std::size_t>(draws));
    Rng rng = Rng::substream(cx.seed, "heat_obs", i);
    const CoefVec u0 = random_coefs(rng, slices[ci]->size());
    ObsExperiment ex = make_experiment(Ts[ti], omega, slices[ci], make_time_grid(Ts[ti], intervals, 20), norm, trace);
    ex.linf_grid = linf_grid;
    const ObsRatio r = obs_ratio(u0, ex);
    ObsExperiment fine = ex;
    fine.norm = NormKind::l2_terminal;
    fine.time_grid = make_time_grid(Ts[ti], 2 * intervals, 21);
    ex.norm = NormKind::l2_terminal;
    const double coarse = obs_ratio(u0, ex).denominator;
    const double dense = obs_ratio(u0, fine).denominator;
    const double refine = dense > 0 ? std::abs(coarse - dense) / dense : 0.0;
    return Row{cutoffs[ci], Ts[ti], d, r, refine};
  });
  res.table.header = {"cutoff", "T", "draw", "numerator", "denominator", "ratio", "infinite", "linf_upper", "refine_rel_change"};
  for (const auto& row : rows) {
    res.table.add({row.cutoff, row.T, std::int64_t{row.draw}, row.r.numerator, row.r.denominator, row.r.ratio,
                   std::string(row.r.infinite ? "true" : "false"),
                   row.r.linf_upper ? Cell{*row.r.linf_upper} : Cell{std::string()}, row.refine});
    if (!row.r.infinite && row.refine > refine_tol)
      res.warnings.push_back("heat_obs: quadrature changes by " + format_double(row.refine) + " under refinement at cutoff " +
                             format_double(row.cutoff) + ", T=" + format_double(row.T));
  }
  res.summary["points"] = omega.size();
  res.summary["time_intervals"] = intervals;
  res.summary["norm"] = norm == NormKind::linf_terminal ? "linf" : "l2";
  res.summary["trace"] = trace == TraceKind::l2_sum ? "l2_sum" : "sup_l1";
}

inline void run_point_obs(const Context& cx, RunResult& res) {
  const Json& xs = cx.cfg["x0"];
  const auto Ks = cx.list("K");
  const auto Ts = cx.list("T");
  const double stol = cx.tol("gramian_singular_tol", kDefaultGramianSingularTol);
  const double wtol = cx.tol("witness_rel", 1e-8);
  const std::size_t per_x = Ks.size() * Ts.size();
  struct Row {
    std::size_t xi;
    int K;
    double T;
    std::size_t modes;
    ObsConstant oc;
    double witness_check;
  };
  const auto rows = parallel_map(xs.size() * per_x, cx.threads, [&](std::size_t i) {
    const std::size_t xi = i / per_x, ki = (i % per_x) / Ts.size(), ti = i % Ts.size();
    const double x0 = real_value(xs[xi]);
    const int K = static_cast<int>(Ks[ki]);
    const SpectrumSlice s = enumerate_modes(1, cx.scale * K * K, cx.scale);
    const ObsGramian g = build_obs_gramian(s, generate(make_generator(gen::Singleton{{x0}})), Ts[ti]);
    ObsConstant oc = solve_worst_case(g, stol);
    double check = 0.0;
    if (oc.status == ObsStatus::finite) check = std::abs(static_cast<double>(rayleigh_quotient(g, oc.witness_hp)) / oc.value - 1);
    return Row{xi, K, Ts[ti], s.size(), std::move(oc), check};
  });
  res.table.header = {"x0", "K", "T", "modes", "status", "value", "min_relative_pivot"};
  std::map<std::size_t, std::vector<std::pair<double, double>>> sweep;
  for (const auto& r : rows) {
    const std::string label = xs[r.xi].is_string() ? xs[r.xi].get<std::string>() : format_double(xs[r.xi].get<double>());
    res.table.add({label, std::int64_t{r.K}, r.T, static_cast<std::int64_t>(r.modes), std::string(to_string(r.oc.status)),
                   r.oc.value, r.oc.min_relative_pivot});
    Json j;
    j["x0"] = label;
    j["K"] = r.K;
    j["T"] = r.T;
    j["status"] = to_string(r.oc.status);
    j["method"] = to_string(r.oc.method);
    j["value"] = json_number(r.oc.value);
    j["min_relative_pivot"] = r.oc.min_relative_pivot;
    j["singular_tol"] = r.oc.singular_tol;
    j["witness"] = json_array(r.oc.witness);
    res.records.push_back(j);
    if (r.witness_check > wtol)
      res.warnings.push_back("point_obs: witness reproduces value only to " + format_double(r.witness_check));
    if (r.oc.status == ObsStatus::finite && r.T == Ts.front()) sweep[r.xi].push_back({double(r.K), r.oc.value});
  }
  Json per = Json::array();
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    Json j;
    const double x0 = real_value(xs[xi]);
    j["x0"] = xs[xi].is_string() ? xs[xi].get<std::string>() : format_double(x0);
    j["nodal_class"] = to_string(classify(nodal_gap_profile(x0, 1000)).label);
    const auto& sw = sweep[xi];
    bool positive = sw.size() >= 3;
    for (const auto& [K, v] : sw) positive = positive && v > 1;
    if (positive) {
      std::vector<double> lk, llv;
      for (const auto& [K, v] : sw) {
        lk.push_back(std::log(K));
        llv.push_back(std::log(std::log(v)));
      }
      j["superlinearity_exponent"] = fit_line(lk, llv).slope;
    }
    per.push_back(j);
  }
  res.summary["points"] = per;
}

inline void run_nodal_demo(const Context& cx, RunResult& res) {
  const PointSet omega = build_point_set(cx.cfg, "omega", cx.seed);
  const auto r = cx.cfg["r"].get<std::int64_t>();
  const double T = cx.cfg.value("T", 1.0);
  auto slice = std::make_shared<const SpectrumSlice>(enumerate_modes(cx.n, cx.scale * static_cast<double>(r), cx.scale));
  const std::int64_t mult = multiplicity(cx.n, r);
  const double tol = cx.tol("spectral_tol", 1e-10 * std::sqrt(static_cast<double>(std::max<std::size_t>(slice->size(), 1))));
  res.table.header = {"r", "multiplicity", "points", "witness_found", "residual", "obs_ratio", "infinite"};
  Json j;
  j["r"] = r;
  j["multiplicity"] = mult;
  j["points"] = detail::points_json(omega);
  j["T"] = T;
  const auto w = mult > 0 ? nullspace_witness(*slice, omega, tol, r) : std::nullopt;
  if (w) {
    const double residual = (eval_matrix(*slice, omega) * *w).cwiseAbs().maxCoeff();
    const ObsExperiment ex = make_experiment(T, omega, slice, make_time_grid(T, 2048, 20));
    const ObsRatio orr = obs_ratio(*w, ex);
    j["witness"] = json_array(*w);
    j["residual"] = residual;
    j["obs_ratio"] = {{"numerator", orr.numerator}, {"denominator", orr.denominator}, {"envelope", orr.envelope},
                      {"ratio", json_number(orr.ratio)}, {"infinite", orr.infinite}};
    res.table.add({r, mult, static_cast<std::int64_t>(omega.size()), std::string("true"), residual, orr.ratio,
                   std::string(orr.infinite ? "true" : "false")});
    if (residual > tol) res.warnings.push_back("nodal_demo: witness residual " + format_double(residual) + " above tolerance");
  } else {
    j["witness"] = nullptr;
    res.table.add({r, mult, static_cast<std::int64_t>(omega.size()), std::string("false"), std::string(), std::string(),
                   std::string()});
  }
  if (cx.n == 2) {
    if (const auto d = diagonal_antisymmetric_witness(*slice, r)) {
      double worst = 0.0;
      for (int i = 1; i <= 100; ++i) {
        const double t = i / 101.0;
        const double x[2] = {t, t};
        worst = std::max(worst, std::abs(eval_combination(*slice, *d, x)));
      }
      j["diagonal_witness"] = json_array(*d);
      j["diagonal_max_abs"] = worst;
    }
  }
  res.records.push_back(j);
}

inline void run_lr_chain(const Context& cx, RunResult& res) {
  const PointSet omega = build_point_set(cx.cfg, "omega", cx.seed);
  const double cutoff = cx.cfg["cutoff"].get<double>();
  const auto Ts = cx.list("T");
  const int draws = cx.cfg["draws"].get<int>();
  TelescopingOptions opt;
  opt.intervals = cx.cfg.value("intervals", opt.intervals);
  const SpectrumSlice slice = enumerate_modes(cx.n, cutoff, cx.scale);
  if (slice.empty()) throw DomainError("lr_chain: cutoff lies below the first eigenvalue");
  std::vector<CoefVec> panel;
  for (int d = 0; d < draws; ++d) {
    Rng rng = Rng::substream(cx.seed, "lr_chain", static_cast<std::uint64_t>(d));
    panel.push_back(random_coefs(rng, slice.size()));
  }
  const auto reps = parallel_map(Ts.size(), cx.threads, [&](std::size_t i) {
    return telescoping_verify(slice, omega, Ts[i], panel, opt);
  });
  res.table.header = {"T", "A", "final_constant", "linf_factor", "telescoped_holds", "non_observable", "intervals"};
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    res.table.add({Ts[i], r.A ? Cell{*r.A} : Cell{std::string()}, r.final_constant, r.linf_factor,
                   std::string(r.telescoped_holds ? "true" : "false"), std::string(r.non_observable ? "true" : "false"),
                   static_cast<std::int64_t>(r.intervals)});
    Json j;
    j["T"] = Ts[i];
    j["A"] = r.A ? Json(*r.A) : Json(nullptr);
    j["final_constant"] = json_number(r.final_constant);
    j["linf_factor"] = r.linf_factor;
    j["lhs"] = json_array(r.lhs);
    j["rhs"] = json_array(r.rhs);
    j["schedule"] = json_array(lr_schedule(ScheduleVariant::dyadic, Ts[i], 1.0, opt.intervals + 1).times);
    j["note"] = r.non_observable ? "no finite A found within search range" : "";
    res.records.push_back(j);
  }
  res.summary["modes"] = slice.size();
  res.summary["panel"] = draws;
}

inline void run_product_obs(const Context& cx, RunResult& res) {
  const PointSet w1 = build_point_set(cx.cfg, "omega", cx.seed);
  const PointSet w2 = build_point_set(cx.cfg, "omega2", cx.seed);
  const auto fit_cutoffs = cx.list("fit_cutoffs");
  const double cutoff = cx.cfg["cutoff"].get<double>();
  const auto Ts = cx.list("T");
  const SpectralOptions opt = cx.spectral_options();
  std::vector<double> uppers;
  for (double L : fit_cutoffs) {
    const SpectralConstant sc = spectral_constant(enumerate_modes(w2.dimension, L, cx.scale), w2, opt);
    if (sc.status != SpectralStatus::finite) throw ContractError("product_obs: factor-2 spectral constant is infinite");
    uppers.push_back(sc.upper);
  }
  const SpectralFit fit2 = fit_growth(fit_cutoffs, uppers);
  const auto reps = parallel_map(Ts.size(), cx.threads, [&](std::size_t i) {
    return product_obs_check(w1, w2, fit2, Ts[i], cutoff, cx.scale);
  });
  res.table.header = {"T", "measured", "predicted", "log_predicted", "holds", "inherited_infinite", "alpha", "C_prime", "frequency_split"};
  for (const auto& r : reps) {
    const double cp = r.prediction ? r.prediction->C_prime : kInf;
    res.table.add({r.T, r.measured.value, r.predicted, r.log_predicted, std::string(r.holds ? "true" : "false"),
                   std::string(r.inherited_infinite ? "true" : "false"), r.alpha, cp, r.frequency_split});
    Json j;
    j["T"] = r.T;
    j["measured"] = json_number(r.measured.value);
    j["measured_status"] = to_string(r.measured.status);
    j["predicted"] = json_number(r.predicted);
    j["log_predicted"] = json_number(r.log_predicted);
    j["holds"] = r.holds;
    j["inherited_infinite"] = r.inherited_infinite;
    Json f1 = Json::array();
    for (const auto& s : r.factor1) f1.push_back({{"tau", s.tau}, {"value", json_number(s.value)}});
    j["factor1"] = f1;
    if (r.prediction) {
      j["prediction"] = {{"alpha", r.prediction->alpha}, {"beta", r.prediction->beta}, {"C1", r.prediction->C1},
                         {"C3", r.prediction->C3}, {"gamma", r.prediction->gamma}, {"eta", r.prediction->eta},
                         {"C_prime", r.prediction->C_prime}, {"note", r.prediction->note}};
      j["frequency_split"] = r.frequency_split;
    }
    res.records.push_back(j);
  }
  res.summary["fit2"] = {{"C", fit2.C}, {"beta", fit2.beta}, {"residual", fit2.residual},
                         {"cutoffs", fit_cutoffs}, {"constants", json_array(uppers)}};
}

inline void run_diophantine(const Context& cx, RunResult& res) {
  const Json& xs = cx.cfg["x0"];
  const int K_max = cx.cfg["K_max"].get<int>();
  const int depth = cx.cfg.value("depth", kCFMaxDepth);
  struct Row {
    RealInput x;
    CFExpansion cf;
    NodalGapProfile prof;
    Classification cls;
  };
  const auto rows = parallel_map(xs.size(), cx.threads, [&](std::size_t i) {
    RealInput x = xs[i].is_string() ? parse_real(xs[i].get<std::string>()) : real_from_double(xs[i].get<double>());
    if (xs[i].is_number()) x.text = format_double(xs[i].get<double>());
    CFExpansion cf = continued_fraction(x, depth);
    NodalGapProfile prof = nodal_gap_profile(x.to_double(), K_max);
    Classification cls = classify(prof);
    return Row{std::move(x), std::move(cf), std::move(prof), std::move(cls)};
  });
  res.table.header = {"x0", "depth", "terminated", "truncated", "quotients", "class", "g_at_K_max"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::string q;
    for (std::size_t t = 0; t < r.cf.quotients.size(); ++t) q += (t ? " " : "") + std::to_string(r.cf.quotients[t]);
    res.table.add({r.x.text, static_cast<std::int64_t>(r.cf.depth()), std::string(r.cf.terminated ? "true" : "false"),
                   std::string(r.cf.truncated ? "true" : "false"), q, std::string(to_string(r.cls.label)),
                   r.prof.g.back()});
    if (r.cf.truncated)
      res.warnings.push_back("diophantine: expansion of " + r.x.text + " truncated at depth " +
                             std::to_string(r.cf.depth()) + " (" + r.cf.note + ")");
    Json j;
    j["x0"] = r.x.text;
    j["x0_double"] = r.cf.x0;
    j["quotients"] = r.cf.quotients;
    Json conv = Json::array();
    for (std::size_t t = 0; t < r.cf.p.size(); ++t) conv.push_back(r.cf.p[t].str() + "/" + r.cf.q[t].str());
    j["convergents"] = conv;
    j["terminated"] = r.cf.terminated;
    j["truncated"] = r.cf.truncated;
    j["class"] = to_string(r.cls.label);
    j["rate_K"] = r.cls.K;
    j["rate"] = json_array(r.cls.rate);
    res.records.push_back(j);

    CsvTable prof;
    prof.header = {"K", "g"};
    for (int K = 1; K <= K_max; ++K) prof.add({std::int64_t{K}, r.prof.at(K)});
    res.extra_tables.emplace_back("diophantine_profile_" + std::to_string(i), std::move(prof));
  }
}

}  // namespace detail

// Validates, dispatches, and returns the rendered-ready result. Throws
// UnknownKind, ConfigError, StrictModeError, or the module errors.
inline RunResult run(const std::string& kind, Json cfg, const RunOptions& opt = {}) {
  if (!known_kind(kind)) throw UnknownKind("unknown experiment kind '" + kind + "'");
  if (cfg.is_object() && cfg.contains("kind") && cfg["kind"] != kind)
    throw ConfigError({{"kind", "config is for '" + cfg["kind"].dump() + "', command asked for '" + kind + "'"}});
  if (cfg.is_object() && !cfg.contains("kind")) cfg["kind"] = kind;
  if (auto d = validate(cfg); !d.empty()) throw ConfigError(std::move(d));

  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.kind = kind;
  res.seed = opt.seed ? *opt.seed : cfg.value("seed", std::uint64_t{0});
  res.hash = config_hash(cfg);
  const detail::Context cx{cfg, res.seed, std::max(1u, opt.threads), domain_dimension(cfg), domain_scale(cfg)};
  if (kind == "gamma") detail::run_gamma(cx, res);
  else if (kind == "remez") detail::run_remez(cx, res);
  else if (kind == "spectral") detail::run_spectral(cx, res);
  else if (kind == "product_spectral") detail::run_product_spectral(cx, res);
  else if (kind == "heat_obs") detail::run_heat_obs(cx, res);
  else if (kind == "point_obs") detail::run_point_obs(cx, res);
  else if (kind == "nodal_demo") detail::run_nodal_demo(cx, res);
  else if (kind == "lr_chain") detail::run_lr_chain(cx, res);
  else if (kind == "product_obs") detail::run_product_obs(cx, res);
  else if (kind == "diophantine") detail::run_diophantine(cx, res);
  res.summary["config"] = cfg;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if ((opt.strict || strict_from_env()) && !res.warnings.empty()) throw StrictModeError(res.warnings);
  return res;
}

inline void write_outputs(const RunResult& res, const std::filesystem::path& dir, Format f) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, bytes] : res.render(f)) write_file(dir / name, bytes);
}

inline Json error_json(ExitCode code, const std::string& kind, const std::string& message,
                       const std::vector<Diagnostic>& diags = {}) {
  Json e;
  e["code"] = static_cast<int>(code);
  e["kind"] = kind;
  e["message"] = message;
  if (!diags.empty()) {
    Json a = Json::array();
    for (const auto& d : diags) a.push_back({{"field", d.field}, {"message", d.message}});
    e["diagnostics"] = a;
  }
  return Json{{"error", e}};
}

}  // namespace heatscope::cli
