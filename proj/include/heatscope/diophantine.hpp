#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "heatscope/errors.hpp"
#include "heatscope/numeric.hpp"

namespace heatscope {

using CFFloat = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<60>, boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline constexpr int kCFMaxDepth = 40;

// A real in (0,1): exact when it is a rational, otherwise a 60-digit value
// with an absolute error bound.
struct RealInput {
  std::string text;
  std::optional<Rational> exact;
  CFFloat approx = 0;
  CFFloat error = 0;

  double to_double() const { return exact ? static_cast<double>(*exact) : static_cast<double>(approx); }
};

namespace detail {

struct RealParser {
  std::string_view s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DomainError("cannot parse real '" + std::string(s) + "': " + what);
  }

  // Decimal literal parsed as an exact rational: 12, 0.25, 1e-8, 3.5E+2.
  Rational number() {
    skip();
    const std::size_t start = pos;
    BigInt mant = 0;
    int scale = 0;
    bool digits = false, dot = false;
    while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || (s[pos] == '.' && !dot))) {
      if (s[pos] == '.') {
        dot = true;
      } else {
        mant = mant * 10 + (s[pos] - '0');
        digits = true;
        if (dot) --scale;
      }
      ++pos;
    }
    if (!digits) fail("expected a number at offset " + std::to_string(start));
    if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
      ++pos;
      int sign = 1;
      if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) sign = s[pos++] == '-' ? -1 : 1;
      int e = 0;
      bool ed = false;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        e = e * 10 + (s[pos++] - '0');
        ed = true;
        if (e > 4000) fail("exponent too large");
      }
      if (!ed) fail("empty exponent");
      scale += sign * e;
    }
    Rational r(mant);
    const BigInt p = boost::multiprecision::pow(BigInt(10), std::abs(scale));
    return scale >= 0 ? r * Rational(p) : r / Rational(p);
  }

  // term := number ['/' number] | 'sqrt(' number ['/' number] ')' | 'golden' | 'pi'
  struct Value {
    std::optional<Rational> exact;
    CFFloat approx;
  };

  Value term() {
    skip();
    auto word = [&](std::string_view w) {
      if (s.substr(pos, w.size()) == w) {
        pos += w.size();
        return true;
      }
      return false;
    };
    if (word("golden")) return {std::nullopt, (sqrt(CFFloat(5)) - 1) / 2};
    if (word("pi")) return {std::nullopt, boost::math::constants::pi<CFFloat>()};
    if (word("sqrt")) {
      if (!eat('(')) fail("expected '(' after sqrt");
      Rational r = number();
      if (eat('/')) {
        const Rational d = number();
        if (d == 0) fail("division by zero");
        r /= d;
      }
      if (!eat(')')) fail("expected ')'");
      if (r < 0) fail("sqrt of a negative number");
      // Perfect squares stay exact.
      const BigInt num = numerator(r), den = denominator(r);
      const BigInt sn = boost::multiprecision::sqrt(num), sd = boost::multiprecision::sqrt(den);
      if (sn * sn == num && sd * sd == den) return {Rational(sn, sd), CFFloat(0)};
      return {std::nullopt, sqrt(CFFloat(num) / CFFloat(den))};
    }
    Rational r = number();
    if (eat('/')) {
      const Rational d = number();
      if (d == 0) fail("division by zero");
      r /= d;
    }
    return {r, CFFloat(0)};
  }

  RealInput parse() {
    RealInput out;
    out.text = std::string(s);
    Rational exact_sum = 0;
    CFFloat approx_sum = 0;
    bool all_exact = true;
    int sign = eat('-') ? -1 : 1;
    for (;;) {
      const Value v = term();
      if (v.exact) {
        exact_sum += sign * *v.exact;
      } else {
        all_exact = false;
        approx_sum += sign * v.approx;
      }
      if (eat('+')) sign = 1;
      else if (eat('-')) sign = -1;
      else break;
    }
    skip();
    if (pos != s.size()) fail("trailing input at offset " + std::to_string(pos));
    if (all_exact) {
      out.exact = exact_sum;
      out.approx = CFFloat(exact_sum);
    } else {
      out.approx = approx_sum + CFFloat(exact_sum);
      out.error = std::numeric_limits<CFFloat>::epsilon() * 64;
    }
    return out;
  }
};

}  // namespace detail

// Accepts sums of terms such as "1/3+1e-8", "sqrt(2)-1", "golden", "0.5".
inline RealInput parse_real(std::string_view text) {
  detail::RealParser p{text};
  return p.parse();
}

inline RealInput real_from_double(double x) {
  RealInput r;
  r.text = std::to_string(x);
  r.exact = Rational(CFFloat(x).convert_to<Rational>());
  r.approx = CFFloat(x);
  return r;
}

struct CFExpansion {
  double x0 = 0.0;
  std::string input;
  std::vector<std::int64_t> quotients;  // a_1, a_2, ...
  std::vector<BigInt> p, q;             // convergents p_i/q_i, i = 1..depth
  bool terminated = false;              // x0 rational and fully expanded
  bool truncated = false;               // precision ran out before the requested depth
  std::string note;

  std::size_t depth() const { return quotients.size(); }
};

namespace detail {

inline void push_quotient(CFExpansion& cf, std::int64_t a) {
  cf.quotients.push_back(a);
  const std::size_t i = cf.p.size();
  // x0 = [0; a_1, a_2, ...]: p_{-1}=1, q_{-1}=0, p_0=0, q_0=1.
  const BigInt pm1 = i >= 1 ? cf.p[i - 1] : BigInt(0), qm1 = i >= 1 ? cf.q[i - 1] : BigInt(1);
  const BigInt pm2 = i >= 2 ? cf.p[i - 2] : (i == 1 ? BigInt(0) : BigInt(1));
  const BigInt qm2 = i >= 2 ? cf.q[i - 2] : (i == 1 ? BigInt(1) : BigInt(0));
  cf.p.push_back(a * pm1 + pm2);
  cf.q.push_back(a * qm1 + qm2);
}

inline constexpr std::int64_t kMaxQuotient = std::int64_t{1} << 62;

}  // namespace detail

inline CFExpansion continued_fraction(const RealInput& x, int depth = kCFMaxDepth) {
  if (depth < 1 || depth > kCFMaxDepth) throw DomainError("continued_fraction: depth must lie in [1, 40]");
  CFExpansion cf;
  cf.x0 = x.to_double();
  cf.input = x.text;
  if (x.exact) {
    Rational r = *x.exact;
    if (!(r > 0 && r < 1)) throw DomainError("continued_fraction: x0 must lie in (0,1)");
    while (static_cast<int>(cf.depth()) < depth) {
      const Rational inv = 1 / r;
      const BigInt a = numerator(inv) / denominator(inv);
      if (a > detail::kMaxQuotient) {
        cf.truncated = true;
        cf.note = "partial quotient exceeds 2^62";
        return cf;
      }
      detail::push_quotient(cf, static_cast<std::int64_t>(a));
      r = inv - Rational(a);
      if (r == 0) {
        cf.terminated = true;
        return cf;
      }
    }
    return cf;
  }

  // Gauss map x -> 1/x - floor(1/x) with an interval [x - e, x + e] carried along.
  CFFloat v = x.approx, e = x.error;
  if (!(v - e > 0 && v + e < 1)) throw DomainError("continued_fraction: x0 must lie in (0,1)");
  const CFFloat ulp = std::numeric_limits<CFFloat>::epsilon();
  while (static_cast<int>(cf.depth()) < depth) {
    if (v - e <= 0) {
      cf.truncated = true;
      cf.note = "remainder indistinguishable from 0 at working precision";
      return cf;
    }
    const CFFloat y = 1 / v;
    const CFFloat ey = e / (v * (v - e)) + 2 * ulp * y;
    const CFFloat lo = floor(y - ey), hi = floor(y + ey);
    if (lo != hi) {
      cf.truncated = true;
      cf.note = "next quotient undetermined at working precision";
      return cf;
    }
    if (lo > CFFloat(detail::kMaxQuotient)) {
      cf.truncated = true;
      cf.note = "partial quotient exceeds 2^62";
      return cf;
    }
    detail::push_quotient(cf, lo.convert_to<std::int64_t>());
    v = y - lo;
    e = ey;
  }
  return cf;
}

inline CFExpansion continued_fraction(double x0, int depth = kCFMaxDepth) {
  return continued_fraction(real_from_double(x0), depth);
}

struct NodalGapProfile {
  double x0 = 0.0;
  int K_max = 0;
  std::vector<double> g;     // g[K-1] = min_{k<=K} |sin(pi k x0)|
  std::vector<int> argmin;   // minimizing k (smallest on ties)

  double at(int K) const { return g.at(static_cast<std::size_t>(K - 1)); }
};

inline NodalGapProfile nodal_gap_profile(double x0, int K_max) {
  if (K_max < 1) throw DomainError("nodal_gap_profile: K_max must be >= 1");
  NodalGapProfile prof;
  prof.x0 = x0;
  prof.K_max = K_max;
  prof.g.resize(static_cast<std::size_t>(K_max));
  prof.argmin.resize(static_cast<std::size_t>(K_max));
  double best = kInf;
  int arg = 0;
  for (int k = 1; k <= K_max; ++k) {
    const double v = std::abs(sin_pi(static_cast<double>(k) * x0));
    if (v < best) {
      best = v;
      arg = k;
    }
    prof.g[static_cast<std::size_t>(k - 1)] = best;
    prof.argmin[static_cast<std::size_t>(k - 1)] = arg;
  }
  return prof;
}

enum class DiophantineClass { rational_like, badly_approximable_like, liouville_like, inconclusive };

inline const char* to_string(DiophantineClass c) {
  switch (c) {
    case DiophantineClass::rational_like: return "rational_like";
    case DiophantineClass::badly_approximable_like: return "badly_approximable_like";
    case DiophantineClass::liouville_like: return "liouville_like";
    case DiophantineClass::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

// r(K) = log g(K) / log K sampled at log-spaced K in [K_start, K_max].
struct ClassifyThresholds {
  double zero_gap = 1e-12;
  double badly_min_rate = -1.5;   // every r(K) >= this
  double liouville_rate = -3.0;   // r(K) <= this ...
  double liouville_share = 0.5;   // ... on at least this share of samples
  int K_start = 10;
  int samples = 24;
  int K_min_profile = 100;
};

struct Classification {
  DiophantineClass label = DiophantineClass::inconclusive;
  std::vector<int> K;
  std::vector<double> rate;
};

inline Classification classify(const NodalGapProfile& prof, const ClassifyThresholds& th = {}) {
  if (prof.K_max < th.K_min_profile)
    throw ContractError("classify: profile needs K_max >= " + std::to_string(th.K_min_profile));
  Classification out;
  if (prof.g.back() <= th.zero_gap) {
    out.label = DiophantineClass::rational_like;
    return out;
  }
  const double l0 = std::log(th.K_start), l1 = std::log(prof.K_max);
  for (int i = 0; i < th.samples; ++i) {
    const int K = static_cast<int>(std::lround(std::exp(l0 + (l1 - l0) * i / (th.samples - 1))));
    if (!out.K.empty() && out.K.back() == K) continue;
    out.K.push_back(K);
    out.rate.push_back(std::log(prof.at(K)) / std::log(static_cast<double>(K)));
  }
  int low = 0;
  bool all_high = true;
  for (double r : out.rate) {
    if (r < th.badly_min_rate) all_high = false;
    if (r <= th.liouville_rate) ++low;
  }
  if (all_high) out.label = DiophantineClass::badly_approximable_like;
  else if (low >= th.liouville_share * static_cast<double>(out.rate.size())) out.label = DiophantineClass::liouville_like;
  else out.label = DiophantineClass::inconclusive;
  return out;
}

}  // namespace heatscope
