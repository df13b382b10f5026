#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "heatscope/errors.hpp"
#include "heatscope/numeric.hpp"

namespace heatscope {

// Frequency multi-index (k_1, ..., k_n) of a Dirichlet sine mode, k_i >= 1.
struct MultiIndex {
  std::vector<int> k;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> components) : k(std::move(components)) {
    if (k.empty()) throw DomainError("MultiIndex: needs at least one component");
    for (int ki : k)
      if (ki < 1) throw DomainError("MultiIndex: components must be >= 1");
  }

  std::size_t dimension() const { return k.size(); }

  std::int64_t sum_of_squares() const {
    std::int64_t s = 0;
    for (int ki : k) s += static_cast<std::int64_t>(ki) * ki;
    return s;
  }

  int max_component() const { return *std::max_element(k.begin(), k.end()); }

  auto operator<=>(const MultiIndex&) const = default;
};

struct EigenMode {
  MultiIndex index;
  double eigenvalue = 0.0;  // scale * |index|^2
};

using CoefVec = Eigen::VectorXd;

inline constexpr double kPhysicalScale = kPi * kPi;
inline constexpr std::size_t kDefaultModeLimit = 100'000;

// All Dirichlet modes of (0,1)^n with eigenvalue <= cutoff, sorted by
// eigenvalue and then lexicographically by index.
struct SpectrumSlice {
  int dimension = 1;
  double cutoff = 0.0;
  double scale = kPhysicalScale;
  std::vector<EigenMode> modes;

  std::size_t size() const { return modes.size(); }
  bool empty() const { return modes.empty(); }

  int max_frequency() const {
    int K = 0;
    for (const auto& m : modes) K = std::max(K, m.index.max_component());
    return K;
  }

  // Largest index along one axis, used for per-axis Bernstein bounds.
  int max_frequency(std::size_t axis) const {
    int K = 0;
    for (const auto& m : modes) K = std::max(K, m.index.k.at(axis));
    return K;
  }
};

namespace detail {

inline void enumerate_rec(int n, int axis, std::int64_t budget, std::vector<int>& cur,
                          std::vector<MultiIndex>& out, std::size_t limit) {
  if (axis == n) {
    if (out.size() >= limit)
      throw ResourceError("enumerate_modes: mode count exceeds the configured limit of " +
                          std::to_string(limit));
    out.emplace_back(cur);
    return;
  }
  const int remaining_axes = n - axis - 1;
  for (int k = 1;; ++k) {
    const std::int64_t used = static_cast<std::int64_t>(k) * k;
    if (used + remaining_axes > budget) break;
    cur[axis] = k;
    enumerate_rec(n, axis + 1, budget - used, cur, out, limit);
  }
}

// Integer bound R with scale*R <= cutoff, tolerant to one-ulp rounding in the
// product scale*r (so cutoff = 4*pi^2 keeps k = 2 at scale pi^2).
inline std::int64_t integer_budget(double cutoff, double scale) {
  const double q = cutoff / scale;
  return static_cast<std::int64_t>(std::floor(q * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())));
}

}  // namespace detail

inline SpectrumSlice enumerate_modes(int n, double cutoff, double scale = kPhysicalScale,
                                     std::size_t limit = kDefaultModeLimit) {
  if (n < 1) throw DomainError("enumerate_modes: dimension must be >= 1");
  if (!(cutoff > 0)) throw DomainError("enumerate_modes: cutoff must be > 0");
  if (!(scale > 0)) throw DomainError("enumerate_modes: scale must be > 0");

  std::vector<MultiIndex> indices;
  std::vector<int> cur(static_cast<std::size_t>(n), 1);
  detail::enumerate_rec(n, 0, detail::integer_budget(cutoff, scale), cur, indices, limit);
  std::sort(indices.begin(), indices.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const auto sa = a.sum_of_squares(), sb = b.sum_of_squares();
    if (sa != sb) return sa < sb;
    return a < b;
  });

  SpectrumSlice slice;
  slice.dimension = n;
  slice.cutoff = cutoff;
  slice.scale = scale;
  slice.modes.reserve(indices.size());
  for (auto& idx : indices) {
    const double ev = scale * static_cast<double>(idx.sum_of_squares());
    slice.modes.push_back({std::move(idx), ev});
  }
  return slice;
}

// Slice made of an explicit list of indices (kept in the given order).
inline SpectrumSlice make_slice(int n, std::vector<MultiIndex> indices, double scale = kPhysicalScale) {
  SpectrumSlice slice;
  slice.dimension = n;
  slice.scale = scale;
  for (auto& idx : indices) {
    if (static_cast<int>(idx.dimension()) != n) throw ContractError("make_slice: index dimension mismatch");
    const double ev = scale * static_cast<double>(idx.sum_of_squares());
    slice.cutoff = std::max(slice.cutoff, ev);
    slice.modes.push_back({std::move(idx), ev});
  }
  return slice;
}

inline void check_in_box(std::span<const double> x) {
  for (double xi : x)
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("point lies outside the closed unit box");
}

// prod_i sqrt(2) sin(pi k_i x_i); L2-normalized on (0,1)^n.
inline double eval_mode(const EigenMode& mode, std::span<const double> x) {
  if (x.size() != mode.index.dimension()) throw ContractError("eval_mode: point dimension mismatch");
  check_in_box(x);
  double v = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) v *= std::sqrt(2.0) * sin_pi(mode.index.k[i] * x[i]);
  return v;
}

inline double eval_combination(const SpectrumSlice& slice, const CoefVec& c, std::span<const double> x) {
  if (static_cast<std::size_t>(c.size()) != slice.size())
    throw ContractError("eval_combination: coefficient vector is not aligned with the slice");
  double s = 0.0;
  for (std::size_t j = 0; j < slice.size(); ++j) s += c[static_cast<Eigen::Index>(j)] * eval_mode(slice.modes[j], x);
  return s;
}

// s_n(r): ordered tuples of positive integers whose squares sum to r.
inline std::int64_t multiplicity(int n, std::int64_t r) {
  if (n < 1) throw DomainError("multiplicity: dimension must be >= 1");
  if (r < 1) throw DomainError("multiplicity: r must be >= 1");
  if (n == 1) {
    const auto s = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(r))));
    return s * s == r ? 1 : 0;
  }
  std::int64_t count = 0;
  for (std::int64_t k = 1; k * k + (n - 1) <= r; ++k) count += multiplicity(n - 1, r - k * k);
  return count;
}

inline std::optional<std::int64_t> find_high_multiplicity(int n, std::int64_t target, std::int64_t r_max) {
  if (target < 1) throw DomainError("find_high_multiplicity: target must be >= 1");
  for (std::int64_t r = 1; r <= r_max; ++r)
    if (multiplicity(n, r) >= target) return r;
  return std::nullopt;
}

// Indices of the modes whose eigenvalue equals scale*r exactly.
inline std::vector<std::size_t> eigenspace_columns(const SpectrumSlice& slice, std::int64_t r) {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < slice.size(); ++j)
    if (slice.modes[j].index.sum_of_squares() == r) cols.push_back(j);
  return cols;
}

// phi_a(x) phi_b(y) - phi_b(x) phi_a(y) with a^2 + b^2 = r, a < b: an
// eigenfunction of (0,1)^2 that vanishes on the diagonal x = y.
inline std::optional<CoefVec> diagonal_antisymmetric_witness(const SpectrumSlice& slice, std::int64_t r) {
  if (slice.dimension != 2) throw ContractError("diagonal witness: slice must be two-dimensional");
  for (std::size_t j = 0; j < slice.size(); ++j) {
    const auto& k = slice.modes[j].index.k;
    if (k[0] >= k[1] || static_cast<std::int64_t>(k[0]) * k[0] + static_cast<std::int64_t>(k[1]) * k[1] != r) continue;
    for (std::size_t i = 0; i < slice.size(); ++i) {
      const auto& q = slice.modes[i].index.k;
      if (q[0] == k[1] && q[1] == k[0]) {
        CoefVec c = CoefVec::Zero(static_cast<Eigen::Index>(slice.size()));
        c[static_cast<Eigen::Index>(j)] = 1.0;
        c[static_cast<Eigen::Index>(i)] = -1.0;
        return c;
      }
    }
  }
  return std::nullopt;
}

}  // namespace heatscope
