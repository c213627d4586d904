#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace krabc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A point in parameter space.
using ParamPoint = Eigen::VectorXd;

// Observations stored row-wise: one row per observation vector.
using Dataset = Eigen::MatrixXd;

using PointList = std::vector<Vector>;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace krabc
