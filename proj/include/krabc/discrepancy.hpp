#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "krabc/errors.hpp"
#include "krabc/kernels.hpp"
#include "krabc/random.hpp"
#include "krabc/types.hpp"

namespace krabc {

enum class EstimatorKind { EnergyLinear, EnergyQuadratic, MmdQuadratic };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::EnergyLinear: return "energy-linear";
    case EstimatorKind::EnergyQuadratic: return "energy-quadratic";
    case EstimatorKind::MmdQuadratic: return "mmd-quadratic";
  }
  return "?";
}

struct DiscrepancyValue {
  double value = 0.0;
  EstimatorKind kind = EstimatorKind::EnergyQuadratic;
};

namespace detail {

inline void check_pair(const Dataset& x, const Dataset& y, const char* who) {
  if (x.rows() == 0 || y.rows() == 0) throw ContractViolation(std::string(who) + ": empty dataset");
  if (x.cols() != y.cols())
    throw ContractViolation(std::string(who) + ": observation dimension mismatch (" + std::to_string(x.cols()) +
                            " vs " + std::to_string(y.cols()) + ")");
}

inline std::vector<Eigen::Index> permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Eigen::Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Mean of |a_i - b_j| over all (i, j).
inline double mean_cross_distance(const Dataset& a, const Dataset& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) s += (a.row(i) - b.row(j)).norm();
  return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

// Mean of |a_i - a_j| over distinct pairs; zero for a single row.
inline double mean_within_distance(const Dataset& a) {
  const auto n = a.rows();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) s += (a.row(i) - a.row(j)).norm();
  return s / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace detail

/// Linear-time energy distance: the mean over consecutive pairs
/// (2i-1, 2i) of |x1 - y2| + |x2 - y1| - |x1 - x2| - |y1 - y2|.
///
/// Samples are paired in the given order; an odd trailing sample is dropped.
/// When `shuffle_seed` is set, X and Y are independently permuted first. The
/// result is unbiased and may be negative.
inline DiscrepancyValue energy_distance_linear(const Dataset& x, const Dataset& y,
                                               std::optional<std::uint64_t> shuffle_seed = std::nullopt) {
  detail::check_pair(x, y, "energy_distance_linear");
  if (x.rows() != y.rows()) throw ContractViolation("energy_distance_linear: |X| != |Y|");
  if (x.rows() < 2) throw ContractViolation("energy_distance_linear: need at least 2 samples");
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> px(static_cast<std::size_t>(n)), py(static_cast<std::size_t>(n));
  if (shuffle_seed) {
    auto rng = make_rng(*shuffle_seed);
    px = detail::permutation(n, rng);
    py = detail::permutation(n, rng);
  } else {
    std::iota(px.begin(), px.end(), Eigen::Index{0});
    std::iota(py.begin(), py.end(), Eigen::Index{0});
  }
  const Eigen::Index pairs = n / 2;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pairs; ++i) {
    const auto x1 = x.row(px[2 * i]), x2 = x.row(px[2 * i + 1]);
    const auto y1 = y.row(py[2 * i]), y2 = y.row(py[2 * i + 1]);
    sum += (x1 - y2).norm() + (x2 - y1).norm() - (x1 - x2).norm() - (y1 - y2).norm();
  }
  return {sum / static_cast<double>(pairs), EstimatorKind::EnergyLinear};
}

/// Quadratic-time energy distance 2 E|x - y| - E|x - x'| - E|y - y'|.
///
/// The cross term averages over all pairs; the within-set terms average over
/// distinct pairs only (U-statistic), so the value is the expectation of the
/// linear estimator over random pairings.
inline DiscrepancyValue energy_distance_quadratic(const Dataset& x, const Dataset& y) {
  detail::check_pair(x, y, "energy_distance_quadratic");
  const double value =
      2.0 * detail::mean_cross_distance(x, y) - detail::mean_within_distance(x) - detail::mean_within_distance(y);
  return {value, EstimatorKind::EnergyQuadratic};
}

/// Biased (V-statistic) squared MMD between two samples.
inline DiscrepancyValue mmd_quadratic(const Dataset& x, const Dataset& y, const KernelConfig& cfg) {
  detail::check_pair(x, y, "mmd_quadratic");
  auto mean_k = [&](const Dataset& a, const Dataset& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.rows(); ++j) s += cfg((a.row(i) - b.row(j)).squaredNorm());
    return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  };
  return {mean_k(x, x) - 2.0 * mean_k(x, y) + mean_k(y, y), EstimatorKind::MmdQuadratic};
}

/// Stacks a list of points into a row-wise dataset.
inline Dataset to_dataset(std::span<const Vector> points) {
  if (points.empty()) return Dataset(0, 0);
  Dataset d(static_cast<Eigen::Index>(points.size()), points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) d.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return d;
}

}  // namespace krabc
