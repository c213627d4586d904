#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "krabc/errors.hpp"
#include "krabc/kernels.hpp"

namespace krabc::oracle {

/// Normal(m0, s0^2) prior on a scalar mean, observations y_1..y_m with known
/// variance obs_var. The likelihood peaks at the sample mean.
struct ConjugateProblem {
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double obs_var = 1.0;
  std::vector<double> observations;

  void validate() const {
    if (!(prior_var > 0.0) || !(obs_var > 0.0)) throw ContractViolation("ConjugateProblem: variances must be positive");
    if (observations.empty()) throw ContractViolation("ConjugateProblem: need at least one observation");
  }

  double mle() const {
    return std::accumulate(observations.begin(), observations.end(), 0.0) / static_cast<double>(observations.size());
  }
};

struct Gaussian1d {
  double mean = 0.0;
  double var = 0.0;
};

/// The posterior proportional to prior * likelihood^N (Gaussian in closed form).
inline Gaussian1d powered_posterior_params(const ConjugateProblem& p, int N) {
  p.validate();
  if (N < 0) throw ContractViolation("powered_posterior_params: N must be >= 0");
  const double m = static_cast<double>(p.observations.size());
  const double precision = 1.0 / p.prior_var + N * m / p.obs_var;
  const double mean = (p.prior_mean / p.prior_var + N * m * p.mle() / p.obs_var) / precision;
  return {mean, 1.0 / precision};
}

/// Kernel mean of Normal(mean, var) under a Gaussian kernel, evaluated at theta:
/// s / sqrt(s^2 + v) * exp(-(theta - mean)^2 / (2 (s^2 + v))), s = bandwidth.
inline double kernel_mean_gaussian(const Gaussian1d& dist, const KernelConfig& cfg, double theta) {
  if (dist.var < 0.0) throw ContractViolation("kernel_mean_gaussian: negative variance");
  const double s2 = cfg.bandwidth() * cfg.bandwidth();
  const double t = s2 + dist.var;
  const double diff = theta - dist.mean;
  return std::sqrt(s2 / t) * std::exp(-diff * diff / (2.0 * t));
}

struct ArgmaxPoint {
  int N = 0;
  double argmax = 0.0;
};

/// Grid argmax of the powered-posterior kernel mean for each N. Under a
/// kernel with constant diagonal this is the minimiser of |mu_N - k(., t)|.
inline std::vector<ArgmaxPoint> powered_argmax_path(const ConjugateProblem& p, const KernelConfig& cfg,
                                                   const std::vector<int>& n_list, const std::vector<double>& grid) {
  if (grid.empty()) throw ContractViolation("powered_argmax_path: empty grid");
  std::vector<ArgmaxPoint> out;
  for (int n : n_list) {
    const auto post = powered_posterior_params(p, n);
    double best = -std::numeric_limits<double>::infinity();
    double arg = grid.front();
    for (double g : grid) {
      const double v = kernel_mean_gaussian(post, cfg, g);
      if (v > best) {
        best = v;
        arg = g;
      }
    }
    out.push_back({n, arg});
  }
  return out;
}

}  // namespace krabc::oracle
