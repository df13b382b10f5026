#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "heatscope/errors.hpp"

namespace heatscope {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// sin(pi*y) with exact zeros at the integers and exact +-1 at half-integers.
inline double sin_pi(double y) {
  double r = std::remainder(y, 2.0);  // r in [-1, 1]
  double sign = 1.0;
  if (r < 0) {
    r = -r;
    sign = -1.0;
  }
  if (r > 0.5) r = 1.0 - r;
  return sign * std::sin(kPi * r);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // Euclidean norm of the residual vector
};

// Ordinary least squares y ~ intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("fit_line: x and y lengths differ");
  if (x.size() < 2) throw ContractError("fit_line: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw ContractError("fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.residual = std::sqrt(rss);
  return f;
}

// Least squares through the origin, y ~ slope * x.
inline LineFit fit_line_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ContractError("fit_line_origin: bad samples");
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx == 0) throw ContractError("fit_line_origin: abscissae are all zero");
  LineFit f;
  f.slope = sxy / sxx;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.slope * x[i];
    rss += r * r;
  }
  f.residual = std::sqrt(rss);
  return f;
}

// Composite trapezoid rule on arbitrary sorted nodes.
inline double trapezoid(std::span<const double> t, std::span<const double> f) {
  if (t.size() != f.size()) throw ContractError("trapezoid: node/value lengths differ");
  double s = 0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

}  // namespace heatscope
