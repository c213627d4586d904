#pragma once

// Hand-rolled generators for property tests. Every case is reproducible
// from its (property seed, case index) pair.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "krabc/random.hpp"
#include "krabc/types.hpp"

namespace krabc::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(make_rng(seed)) {}

  Rng& rng() { return rng_; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(rng_); }

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Log-uniform magnitude between 10^lo_exp and 10^hi_exp.
  double log_uniform(double lo_exp, double hi_exp) { return std::pow(10.0, uniform(lo_exp, hi_exp)); }

  Vector vector(Eigen::Index d, double scale = 1.0) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * standard_normal(rng_);
    return v;
  }

  PointList points(std::size_t n, Eigen::Index d, double scale = 1.0) {
    PointList p;
    for (std::size_t i = 0; i < n; ++i) p.push_back(vector(d, scale));
    return p;
  }

  Dataset dataset(Eigen::Index n, Eigen::Index d, double shift = 0.0, double scale = 1.0) {
    Dataset x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < d; ++k) x(i, k) = shift + scale * standard_normal(rng_);
    return x;
  }

  /// Symmetric positive semi-definite matrix with unit diagonal: a Gaussian
  /// Gram matrix of random points at a random bandwidth.
  Matrix unit_diagonal_psd(Eigen::Index n) {
    const auto d = integer(1, 4);
    const double bw = log_uniform(-1.0, 1.0);
    Matrix g(n, n);
    PointList p = points(static_cast<std::size_t>(n), d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        g(i, j) = std::exp(-(p[static_cast<std::size_t>(i)] - p[static_cast<std::size_t>(j)]).squaredNorm() / (2 * bw * bw));
    return g;
  }

 private:
  Rng rng_;
};

/// Runs `body(gen, case_index)` for `cases` independent generators.
template <class Body>
void for_cases(std::uint64_t seed, int cases, Body&& body) {
  for (int c = 0; c < cases; ++c) {
    Gen g(derive_seed({seed, static_cast<std::uint64_t>(c)}));
    body(g, c);
  }
}

}  // namespace krabc::testing
