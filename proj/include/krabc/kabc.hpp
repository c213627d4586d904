#pragma once

#include <cmath>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "krabc/errors.hpp"
#include "krabc/kernels.hpp"
#include "krabc/types.hpp"

namespace krabc {

/// Empirical kernel mean sum_i w_i k(., theta_i). Weights are the raw ridge
/// solution: they may be negative and need not sum to one.
struct WeightedParticleSet {
  PointList particles;
  Vector weights;
  KernelConfig kernel;

  WeightedParticleSet(PointList ps, Vector ws, KernelConfig k)
      : particles(std::move(ps)), weights(std::move(ws)), kernel(k) {
    if (particles.empty()) throw ContractViolation("WeightedParticleSet: no particles");
    if (static_cast<Eigen::Index>(particles.size()) != weights.size())
      throw ContractViolation("WeightedParticleSet: particle/weight count mismatch");
    if (!weights.allFinite()) throw ContractViolation("WeightedParticleSet: non-finite weight");
    const auto dim = particles.front().size();
    for (const auto& p : particles) {
      if (p.size() != dim) throw ContractViolation("WeightedParticleSet: particles have unequal dimensions");
      if (!p.allFinite()) throw ContractViolation("WeightedParticleSet: non-finite particle");
    }
  }

  std::size_t size() const noexcept { return particles.size(); }
  Eigen::Index dim() const noexcept { return particles.front().size(); }
  double weight_sum() const { return weights.sum(); }

  /// The embedding evaluated at theta: sum_i w_i k(theta, theta_i).
  double operator()(const Vector& theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < particles.size(); ++i)
      s += weights(static_cast<Eigen::Index>(i)) * kernel((theta - particles[i]).squaredNorm());
    return s;
  }
};

/// Solves (G + n delta I) w = kvec by Cholesky factorisation.
///
/// One step of iterative refinement is applied when the first solve misses
/// the residual bound |(G + n delta I) w - kvec| <= 1e-8 (1 + |kvec|).
inline Vector kabc_weights(const Matrix& gram, const Vector& kvec, double delta) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n) throw ContractViolation("kabc_weights: Gram matrix is not square");
  if (kvec.size() != n) throw ContractViolation("kabc_weights: kernel vector length != n");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ContractViolation("kabc_weights: delta must be positive");
  if (n == 0) throw ContractViolation("kabc_weights: empty system");
  if (!gram.allFinite() || !kvec.allFinite()) throw NumericalError("kabc_weights: non-finite entries in Gram matrix or kernel vector");

  Matrix a = gram;
  a.diagonal().array() += static_cast<double>(n) * delta;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "kabc_weights: Cholesky factorisation failed (n=" << n << ", n*delta=" << n * delta
        << ", min diag=" << a.diagonal().minCoeff() << ")";
    throw NumericalError(msg.str());
  }
  Vector w = llt.solve(kvec);
  const double bound = 1e-8 * (1.0 + kvec.norm());
  Vector r = kvec - a * w;
  if (r.norm() > bound) {
    w += llt.solve(r);
    r = kvec - a * w;
  }
  if (!w.allFinite() || r.norm() > bound) {
    std::ostringstream msg;
    const auto diag = llt.matrixL().toDenseMatrix().diagonal();
    const double cond_est = std::pow(diag.maxCoeff() / diag.minCoeff(), 2.0);
    msg << "kabc_weights: solve failed (residual=" << r.norm() << ", bound=" << bound
        << ", condition estimate=" << cond_est << ")";
    throw NumericalError(msg.str());
  }
  return w;
}

/// Kernel ABC posterior embedding from simulated (theta_i, s_i) pairs, where
/// s_i are fixed-length summaries of the simulated data and `observed` is the
/// summary of the observed data. k_Y uses one bandwidth for both G and k(y*).
inline WeightedParticleSet embed_posterior(PointList params, std::span<const Vector> summaries, const Vector& observed,
                                           const KernelConfig& ky, const KernelConfig& ktheta, double delta) {
  if (params.size() != summaries.size()) throw ContractViolation("embed_posterior: |params| != |summaries|");
  if (params.size() < 2) throw ContractViolation("embed_posterior: need at least 2 simulated pairs");
  for (const auto& s : summaries)
    if (s.size() != observed.size())
      throw ContractViolation("embed_posterior: summary dimension " + std::to_string(s.size()) +
                              " != observed summary dimension " + std::to_string(observed.size()));
  const Matrix g = gram_matrix(summaries, ky);
  const Vector kvec = kernel_vector(summaries, observed, ky);
  Vector w = kabc_weights(g, kvec, delta);
  return WeightedParticleSet(std::move(params), std::move(w), ktheta);
}

struct PosteriorMean {
  ParamPoint mean;
  bool degenerate = false;  // |sum w| < 1e-12; `mean` is then the unweighted average
};

inline PosteriorMean posterior_mean(const WeightedParticleSet& ps) {
  const double total = ps.weight_sum();
  Vector acc = Vector::Zero(ps.dim());
  if (std::abs(total) < 1e-12) {
    for (const auto& p : ps.particles) acc += p;
    return {acc / static_cast<double>(ps.size()), true};
  }
  for (std::size_t i = 0; i < ps.size(); ++i) acc += ps.weights(static_cast<Eigen::Index>(i)) * ps.particles[i];
  return {acc / total, false};
}

/// Squared RKHS distance between the embedding and the uniform-weight
/// empirical mean of `points`, using the embedding's kernel.
inline double mmd_to_embedding(const WeightedParticleSet& emb, std::span<const Vector> points) {
  if (points.empty()) throw ContractViolation("mmd_to_embedding: empty point set");
  const auto& k = emb.kernel;
  double ee = 0.0;
  for (std::size_t i = 0; i < emb.size(); ++i)
    for (std::size_t j = 0; j < emb.size(); ++j)
      ee += emb.weights(static_cast<Eigen::Index>(i)) * emb.weights(static_cast<Eigen::Index>(j)) *
            k((emb.particles[i] - emb.particles[j]).squaredNorm());
  double ep = 0.0;
  for (const auto& x : points) ep += emb(x);
  double pp = 0.0;
  for (const auto& a : points)
    for (const auto& b : points) pp += k((a - b).squaredNorm());
  const double m = static_cast<double>(points.size());
  return ee - 2.0 * ep / m + pp / (m * m);
}

}  // namespace krabc
