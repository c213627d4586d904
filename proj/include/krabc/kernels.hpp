#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "krabc/errors.hpp"
#include "krabc/random.hpp"
#include "krabc/types.hpp"

namespace krabc {

/// Gaussian kernel k(x, y) = exp(-|x - y|^2 / (2 bandwidth^2)).
///
/// With this convention k(x, x) = 1 for every x, which herding relies on to
/// identify the greedy step with MMD minimisation.
class KernelConfig {
 public:
  explicit KernelConfig(double bandwidth) : bandwidth_(bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw ContractViolation("kernel bandwidth must be positive and finite, got " + std::to_string(bandwidth));
    inv_two_sq_ = 1.0 / (2.0 * bandwidth * bandwidth);
  }

  double bandwidth() const noexcept { return bandwidth_; }

  double operator()(double squared_distance) const noexcept { return std::exp(-squared_distance * inv_two_sq_); }

 private:
  double bandwidth_;
  double inv_two_sq_;
};

inline double squared_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size())
    throw ContractViolation("dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  return (x - y).squaredNorm();
}

inline double gaussian_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                              const KernelConfig& cfg) {
  return cfg(squared_distance(x, y));
}

/// Symmetric Gram matrix G_ij = k(p_i, p_j) with an exact unit diagonal.
inline Matrix gram_matrix(std::span<const Vector> points, const KernelConfig& cfg) {
  if (points.empty()) throw ContractViolation("gram_matrix: empty point set");
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw ContractViolation("gram_matrix: points have unequal dimensions");
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = cfg((points[i] - points[j]).squaredNorm());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

/// Kernel vector (k(p_1, q), ..., k(p_n, q)).
inline Vector kernel_vector(std::span<const Vector> points, const Vector& q, const KernelConfig& cfg) {
  Vector out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) out(static_cast<Eigen::Index>(i)) = gaussian_kernel(points[i], q, cfg);
  return out;
}

inline constexpr std::size_t kMedianExactLimit = 2000;

/// Median of the pairwise Euclidean distances.
///
/// Sets larger than kMedianExactLimit are reduced to a seeded uniform
/// subsample of that size first. Throws DegenerateBandwidth when the median
/// is zero (e.g. all points identical).
inline double median_heuristic(std::span<const Vector> points, std::uint64_t subsample_seed = 0) {
  if (points.size() < 2) throw ContractViolation("median_heuristic: need at least 2 points");
  const auto dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw ContractViolation("median_heuristic: points have unequal dimensions");

  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.size() > kMedianExactLimit) {
    auto rng = make_rng(subsample_seed);
    // Partial Fisher-Yates: the first kMedianExactLimit entries become the subsample.
    for (std::size_t i = 0; i < kMedianExactLimit; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(kMedianExactLimit);
    std::sort(idx.begin(), idx.end());
  }

  std::vector<double> d;
  d.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) d.push_back((points[idx[a]] - points[idx[b]]).norm());

  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0) || !std::isfinite(med))
    throw DegenerateBandwidth("median heuristic is degenerate (median pairwise distance = " + std::to_string(med) + ")");
  return med;
}

/// Candidate bandwidths base * 2^e for e on a uniform grid over [-span, span]
/// with `per_octave` points per doubling. Defaults give the 9 values
/// base/16, base/8, ..., 16 base.
inline std::vector<double> bandwidth_grid(double base, int span = 4, int per_octave = 1) {
  if (!(base > 0.0)) throw ContractViolation("bandwidth_grid: base must be positive");
  if (span < 0 || per_octave < 1) throw ContractViolation("bandwidth_grid: invalid resolution");
  std::vector<double> grid;
  for (int k = -span * per_octave; k <= span * per_octave; ++k)
    grid.push_back(base * std::exp2(static_cast<double>(k) / per_octave));
  return grid;
}

/// Regularisation grid: `count` log-spaced values from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ContractViolation("log_grid: invalid range");
  if (count == 1) return {lo};
  std::vector<double> grid;
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) grid.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
  return grid;
}

}  // namespace krabc
