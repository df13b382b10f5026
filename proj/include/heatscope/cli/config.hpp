#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatscope/diophantine.hpp"
#include "heatscope/eigenbasis.hpp"
#include "heatscope/errors.hpp"
#include "heatscope/pointsets.hpp"
#include "heatscope/rng.hpp"

namespace heatscope::cli {

using Json = nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"gamma",      "remez",     "spectral", "product_spectral",
                                              "heat_obs",   "point_obs", "nodal_demo", "lr_chain",
                                              "product_obs", "diophantine"};
  return kinds;
}

inline bool known_kind(const std::string& k) {
  const auto& ks = experiment_kinds();
  return std::find(ks.begin(), ks.end(), k) != ks.end();
}

struct Diagnostic {
  std::string field;
  std::string message;
};

// Thrown by run() when validation fails; carries every diagnostic.
struct ConfigError : std::runtime_error {
  std::vector<Diagnostic> diagnostics;
  explicit ConfigError(std::vector<Diagnostic> d)
      : std::runtime_error("invalid config: " + (d.empty() ? std::string("?") : d.front().field + ": " + d.front().message)),
        diagnostics(std::move(d)) {}
};

struct UnknownKind : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

class Checker {
 public:
  explicit Checker(const Json& root) : root_(root) {}
  std::vector<Diagnostic> diags;

  void add(const std::string& field, const std::string& msg) { diags.push_back({field, msg}); }

  const Json* find(const Json& obj, const std::string& key) const {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  // Returns the node or nullptr, recording a diagnostic when required and absent.
  const Json* get(const Json& obj, const std::string& key, const std::string& path, bool required) {
    const Json* v = find(obj, key);
    if (!v && required) add(path, "is required");
    return v;
  }

  std::optional<double> number(const Json& obj, const std::string& key, const std::string& path, bool required,
                               double lo, bool lo_open, double hi = kInf) {
    const Json* v = get(obj, key, path, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      add(path, "must be a number");
      return std::nullopt;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x) || (lo_open ? !(x > lo) : !(x >= lo)) || x > hi) {
      add(path, "must lie in " + std::string(lo_open ? "(" : "[") + format(lo) + ", " + format(hi) + "]");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::int64_t> integer(const Json& obj, const std::string& key, const std::string& path,
                                      bool required, std::int64_t lo, std::int64_t hi) {
    const Json* v = get(obj, key, path, required);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      add(path, "must be an integer");
      return std::nullopt;
    }
    const auto x = v->get<std::int64_t>();
    if (x < lo || x > hi) {
      add(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return x;
  }

  // Nonempty, strictly ascending list of numbers > lo.
  std::optional<std::vector<double>> ascending(const Json& obj, const std::string& key, const std::string& path,
                                               bool required, double lo, bool integers = false) {
    const Json* v = get(obj, key, path, required);
    if (!v) return std::nullopt;
    if (!v->is_array() || v->empty()) {
      add(path, "must be a nonempty list");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const Json& e = (*v)[i];
      if (integers ? !e.is_number_integer() : !e.is_number()) {
        add(path + "[" + std::to_string(i) + "]", integers ? "must be an integer" : "must be a number");
        return std::nullopt;
      }
      const double x = e.get<double>();
      if (!(x > lo) || !std::isfinite(x)) {
        add(path + "[" + std::to_string(i) + "]", "must be > " + format(lo));
        return std::nullopt;
      }
      if (!out.empty() && !(x > out.back())) {
        add(path, "must be in strictly ascending order");
        return std::nullopt;
      }
      out.push_back(x);
    }
    return out;
  }

  // Returns the dimension of the described set, or -1 when invalid.
  int generator(const Json& g, const std::string& path) {
    if (!g.is_object()) {
      add(path, "must be an object with a \"type\" field");
      return -1;
    }
    const Json* t = find(g, "type");
    if (!t || !t->is_string()) {
      add(path + ".type", "is required");
      return -1;
    }
    const std::string type = t->get<std::string>();
    if (type == "omega_alpha") {
      const auto a = number(g, "alpha", path + ".alpha", true, 0, true);
      const auto m = integer(g, "m", path + ".m", true, 1, 100000);
      return a && m ? 1 : -1;
    }
    if (type == "omega_exp") return integer(g, "m", path + ".m", true, 1, 1000) ? 1 : -1;
    if (type == "cantor") {
      const auto l = integer(g, "level", path + ".level", true, 0, 20);
      const auto r = number(g, "ratio", path + ".ratio", false, 0, true, 0.5);
      return l && (r || !find(g, "ratio")) ? 1 : -1;
    }
    if (type == "singleton") {
      const Json* x = get(g, "x0", path + ".x0", true);
      if (!x) return -1;
      if (!x->is_array() || x->empty()) {
        add(path + ".x0", "must be a nonempty list of coordinates");
        return -1;
      }
      for (std::size_t i = 0; i < x->size(); ++i)
        if (!coordinate((*x)[i], path + ".x0[" + std::to_string(i) + "]", true)) return -1;
      return static_cast<int>(x->size());
    }
    if (type == "uniform_grid") {
      const Json* p = get(g, "per_axis", path + ".per_axis", true);
      if (!p) return -1;
      if (!p->is_array() || p->empty()) {
        add(path + ".per_axis", "must be a nonempty list");
        return -1;
      }
      for (const auto& e : *p)
        if (!e.is_number_integer() || e.get<std::int64_t>() < 1 || e.get<std::int64_t>() > 100000) {
          add(path + ".per_axis", "entries must be integers in [1, 100000]");
          return -1;
        }
      return static_cast<int>(p->size());
    }
    if (type == "product") {
      const Json* a = get(g, "a", path + ".a", true);
      const Json* b = get(g, "b", path + ".b", true);
      if (!a || !b) return -1;
      const int da = generator(*a, path + ".a"), db = generator(*b, path + ".b");
      return da < 0 || db < 0 ? -1 : da + db;
    }
    if (type == "explicit") {
      const Json* p = get(g, "points", path + ".points", true);
      if (!p) return -1;
      if (!p->is_array() || p->empty()) {
        add(path + ".points", "must be a nonempty list of points");
        return -1;
      }
      int dim = -1;
      for (std::size_t i = 0; i < p->size(); ++i) {
        const Json& q = (*p)[i];
        const std::string qp = path + ".points[" + std::to_string(i) + "]";
        if (!q.is_array() || q.empty()) {
          add(qp, "must be a nonempty list of coordinates");
          return -1;
        }
        if (dim >= 0 && static_cast<int>(q.size()) != dim) {
          add(qp, "dimension differs from the first point");
          return -1;
        }
        dim = static_cast<int>(q.size());
        for (std::size_t c = 0; c < q.size(); ++c)
          if (!coordinate(q[c], qp + "[" + std::to_string(c) + "]", false)) return -1;
      }
      return dim;
    }
    if (type == "random") {
      const auto c = integer(g, "count", path + ".count", true, 1, 100000);
      const auto d = integer(g, "dimension", path + ".dimension", true, 1, 8);
      return c && d ? static_cast<int>(*d) : -1;
    }
    add(path + ".type", "unknown generator type '" + type + "'");
    return -1;
  }

  bool coordinate(const Json& v, const std::string& path, bool open) {
    double x;
    if (v.is_number()) {
      x = v.get<double>();
    } else if (v.is_string()) {
      try {
        x = parse_real(v.get<std::string>()).to_double();
      } catch (const std::exception& e) {
        add(path, e.what());
        return false;
      }
    } else {
      add(path, "must be a number or a numeric expression string");
      return false;
    }
    if (open ? !(x > 0 && x < 1) : !(x >= 0 && x <= 1)) {
      add(path, open ? "must lie in (0,1)" : "must lie in [0,1]");
      return false;
    }
    return true;
  }

  const Json& root() const { return root_; }

  static std::string format(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

 private:
  const Json& root_;
};

}  // namespace detail

inline int domain_dimension(const Json& cfg) {
  if (cfg.contains("domain") && cfg["domain"].contains("n")) return cfg["domain"]["n"].get<int>();
  return 1;
}

inline double domain_scale(const Json& cfg) {
  if (cfg.contains("domain") && cfg["domain"].contains("scale")) {
    const Json& s = cfg["domain"]["scale"];
    if (s.is_string()) return kPhysicalScale;
    return s.get<double>();
  }
  return kPhysicalScale;
}

// Pure schema and range check. The kind comes from the config's "kind" field.
inline std::vector<Diagnostic> validate(const Json& cfg) {
  detail::Checker ck(cfg);
  if (!cfg.is_object()) {
    ck.add("", "config must be a JSON object");
    return ck.diags;
  }
  const Json* kj = ck.get(cfg, "kind", "kind", true);
  if (!kj) return ck.diags;
  if (!kj->is_string() || !known_kind(kj->get<std::string>())) {
    ck.add("kind", "unknown experiment kind");
    return ck.diags;
  }
  const std::string kind = kj->get<std::string>();

  if (const Json* s = ck.find(cfg, "seed"); s && !s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0))
    ck.add("seed", "must be a nonnegative integer");

  int n = 1;
  if (const Json* d = ck.find(cfg, "domain")) {
    if (!d->is_object()) {
      ck.add("domain", "must be an object");
    } else {
      if (auto v = ck.integer(*d, "n", "domain.n", false, 1, 8)) n = static_cast<int>(*v);
      if (const Json* s = ck.find(*d, "scale")) {
        if (s->is_string()) {
          if (s->get<std::string>() != "pi2") ck.add("domain.scale", "must be a positive number or \"pi2\"");
        } else {
          ck.number(*d, "scale", "domain.scale", false, 0, true);
        }
      }
    }
  }
  if (const Json* t = ck.find(cfg, "tolerances")) {
    if (!t->is_object()) {
      ck.add("tolerances", "must be an object");
    } else {
      ck.number(*t, "spectral_tol", "tolerances.spectral_tol", false, 0, true);
      ck.number(*t, "gramian_singular_tol", "tolerances.gramian_singular_tol", false, 0, true, 1);
      ck.number(*t, "quadrature_rel_change", "tolerances.quadrature_rel_change", false, 0, true);
      ck.number(*t, "witness_rel", "tolerances.witness_rel", false, 0, true);
    }
  }

  auto omega = [&](const char* key, std::optional<int> dim) {
    const Json* g = ck.get(cfg, key, key, true);
    if (!g) return;
    const int d = ck.generator(*g, key);
    if (d >= 0 && dim && d != *dim)
      ck.add(key, "describes a " + std::to_string(d) + "-dimensional set, expected " + std::to_string(*dim));
  };
  auto times = [&]() { ck.ascending(cfg, "T", "T", true, 0); };
  auto draws = [&](bool required) { ck.integer(cfg, "draws", "draws", required, 1, 1000000); };

  if (kind == "gamma") {
    if (n != 1) ck.add("domain.n", "gamma needs a one-dimensional set");
    omega("omega", 1);
    const Json* kr = ck.get(cfg, "k_range", "k_range", true);
    if (kr) {
      if (!kr->is_array() || kr->size() != 2 || !(*kr)[0].is_number_integer() || !(*kr)[1].is_number_integer())
        ck.add("k_range", "must be [k_lo, k_hi] with integers");
      else if ((*kr)[0].get<int>() < 2 || (*kr)[1].get<int>() < (*kr)[0].get<int>())
        ck.add("k_range", "needs 2 <= k_lo <= k_hi");
    }
    if (const Json* m = ck.find(cfg, "method"))
      if (!m->is_string() || (*m != "greedy" && *m != "exact" && *m != "auto"))
        ck.add("method", "must be one of greedy, exact, auto");
    ck.number(cfg, "budget", "budget", false, 0, true);
  } else if (kind == "remez") {
    if (n != 1) ck.add("domain.n", "remez needs a one-dimensional domain");
    omega("omega", 1);
    ck.ascending(cfg, "cutoffs", "cutoffs", true, 0);
    draws(true);
    ck.integer(cfg, "grid", "grid", false, 2, 100000000);
  } else if (kind == "spectral") {
    omega("omega", n);
    ck.ascending(cfg, "cutoffs", "cutoffs", true, 0);
    ck.integer(cfg, "starts", "starts", false, 1, 100000);
    ck.integer(cfg, "iterations", "iterations", false, 1, 1000000);
  } else if (kind == "product_spectral") {
    omega("omega", std::nullopt);
    omega("omega2", std::nullopt);
    ck.ascending(cfg, "cutoffs", "cutoffs", true, 0);
    ck.integer(cfg, "starts", "starts", false, 1, 100000);
    ck.integer(cfg, "iterations", "iterations", false, 1, 1000000);
  } else if (kind == "heat_obs") {
    omega("omega", n);
    ck.ascending(cfg, "cutoffs", "cutoffs", true, 0);
    times();
    draws(true);
    if (const Json* v = ck.find(cfg, "norm"); v && (!v->is_string() || (*v != "l2" && *v != "linf")))
      ck.add("norm", "must be l2 or linf");
    if (const Json* v = ck.find(cfg, "trace"); v && (!v->is_string() || (*v != "sup_l1" && *v != "l2_sum")))
      ck.add("trace", "must be sup_l1 or l2_sum");
    ck.integer(cfg, "time_intervals", "time_intervals", false, 1, 10000000);
    ck.integer(cfg, "linf_grid", "linf_grid", false, 2, 100000);
  } else if (kind == "point_obs") {
    if (n != 1) ck.add("domain.n", "point_obs needs a one-dimensional domain");
    const Json* x = ck.get(cfg, "x0", "x0", true);
    if (x) {
      if (!x->is_array() || x->empty()) ck.add("x0", "must be a nonempty list");
      else
        for (std::size_t i = 0; i < x->size(); ++i) ck.coordinate((*x)[i], "x0[" + std::to_string(i) + "]", true);
    }
    ck.ascending(cfg, "K", "K", true, 0, true);
    times();
  } else if (kind == "nodal_demo") {
    omega("omega", n);
    ck.integer(cfg, "r", "r", true, 1, 100000000);
    ck.number(cfg, "T", "T", false, 0, true);
  } else if (kind == "lr_chain") {
    omega("omega", n);
    ck.number(cfg, "cutoff", "cutoff", true, 0, true);
    times();
    draws(true);
    ck.integer(cfg, "intervals", "intervals", false, 2, 60);
  } else if (kind == "product_obs") {
    omega("omega", 1);
    omega("omega2", std::nullopt);
    ck.ascending(cfg, "fit_cutoffs", "fit_cutoffs", true, 0);
    if (const Json* f = ck.find(cfg, "fit_cutoffs"); f && f->is_array() && f->size() < 3)
      ck.add("fit_cutoffs", "needs at least 3 cutoffs for a growth fit");
    ck.number(cfg, "cutoff", "cutoff", true, 0, true);
    times();
  } else if (kind == "diophantine") {
    const Json* x = ck.get(cfg, "x0", "x0", true);
    if (x) {
      if (!x->is_array() || x->empty()) ck.add("x0", "must be a nonempty list");
      else
        for (std::size_t i = 0; i < x->size(); ++i) ck.coordinate((*x)[i], "x0[" + std::to_string(i) + "]", true);
    }
    ck.integer(cfg, "K_max", "K_max", true, 100, 10000000);
    ck.integer(cfg, "depth", "depth", false, 1, kCFMaxDepth);
  }
  return ck.diags;
}

// ---------------------------------------------------------------------------
// Typed accessors; valid configs only.

inline double real_value(const Json& v) {
  return v.is_number() ? v.get<double>() : parse_real(v.get<std::string>()).to_double();
}

inline GeneratorPtr build_generator(const Json& g, std::uint64_t seed, const std::string& path) {
  const std::string type = g["type"].get<std::string>();
  if (type == "omega_alpha") return make_generator(gen::OmegaAlpha{g["alpha"].get<double>(), g["m"].get<int>()});
  if (type == "omega_exp") return make_generator(gen::OmegaExp{g["m"].get<int>()});
  if (type == "cantor") return make_generator(gen::Cantor{g["level"].get<int>(), g.value("ratio", 1.0 / 3.0)});
  if (type == "singleton") {
    Point x;
    for (const auto& v : g["x0"]) x.push_back(real_value(v));
    return make_generator(gen::Singleton{x});
  }
  if (type == "uniform_grid") return make_generator(gen::UniformGrid{g["per_axis"].get<std::vector<int>>()});
  if (type == "product")
    return make_generator(gen::Product{build_generator(g["a"], seed, path + ".a"), build_generator(g["b"], seed, path + ".b")});
  if (type == "explicit") {
    std::vector<Point> pts;
    for (const auto& p : g["points"]) {
      Point q;
      for (const auto& v : p) q.push_back(real_value(v));
      pts.push_back(std::move(q));
    }
    const int dim = static_cast<int>(pts.front().size());
    return make_generator(gen::Explicit{dim, std::move(pts)});
  }
  if (type == "random") {
    // Interior uniform points drawn from the named sub-stream of the run seed.
    Rng rng = Rng::substream(seed, "omega:" + path);
    const int count = g["count"].get<int>(), dim = g["dimension"].get<int>();
    std::vector<Point> pts;
    for (int i = 0; i < count; ++i) {
      Point q;
      for (int a = 0; a < dim; ++a) {
        double v = rng.uniform();
        while (v == 0.0) v = rng.uniform();
        q.push_back(v);
      }
      pts.push_back(std::move(q));
    }
    return make_generator(gen::Explicit{dim, std::move(pts)});
  }
  throw DomainError("unknown generator type '" + type + "'");
}

inline PointSet build_point_set(const Json& cfg, const std::string& key, std::uint64_t seed) {
  return generate(build_generator(cfg.at(key), seed, key));
}

}  // namespace heatscope::cli
