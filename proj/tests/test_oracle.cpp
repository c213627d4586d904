#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "krabc/oracle.hpp"
#include "support/generators.hpp"

using namespace krabc;
using namespace krabc::oracle;
using krabc::testing::for_cases;
using krabc::testing::Gen;

namespace {

ConjugateProblem single_observation() { return {0.0, 100.0, 1.0, {1.0}}; }

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0; lo + i * step <= hi + 1e-12; ++i) g.push_back(lo + i * step);
  return g;
}

}  // namespace

TEST(PoweredPosterior, ZeroPowerIsPrior) {
  const auto g = powered_posterior_params({2.0, 9.0, 1.0, {5.0, 6.0}}, 0);
  EXPECT_EQ(g.mean, 2.0);
  EXPECT_DOUBLE_EQ(g.var, 9.0);
}

TEST(PoweredPosterior, SingleObservationUpdate) {
  const auto g = powered_posterior_params(single_observation(), 1);
  EXPECT_NEAR(g.mean, 0.990099, 1e-6);
  EXPECT_NEAR(g.mean, 1.0 / 1.01, 1e-15);
  EXPECT_NEAR(g.var, 1.0 / 1.01, 1e-15);
}

TEST(PoweredPosterior, LargePowerConcentratesOnSampleMean) {
  const ConjugateProblem p{0.0, 100.0, 1.0, {0.5, 1.5, 2.5}};
  const auto g = powered_posterior_params(p, 1000000);
  EXPECT_NEAR(g.mean, 1.5, 1e-6);
  EXPECT_LT(g.var, 1e-6);
}

TEST(PoweredPosterior, Contract) {
  EXPECT_THROW(powered_posterior_params(single_observation(), -1), ContractViolation);
  EXPECT_THROW(powered_posterior_params({0.0, 0.0, 1.0, {1.0}}, 1), ContractViolation);
  EXPECT_THROW(powered_posterior_params({0.0, 1.0, 1.0, {}}, 1), ContractViolation);
}

TEST(KernelMeanGaussian, DiracReducesToKernel) {
  const KernelConfig k(0.7);
  for (double t : grid(-3.0, 3.0, 0.25))
    EXPECT_NEAR(kernel_mean_gaussian({0.4, 0.0}, k, t), gaussian_kernel(Vector::Constant(1, t), Vector::Constant(1, 0.4), k),
                1e-12);
}

TEST(KernelMeanGaussian, MaximalAtMean) {
  const KernelConfig k(1.3);
  const Gaussian1d d{0.8, 2.0};
  const double peak = kernel_mean_gaussian(d, k, 0.8);
  for (double t : grid(-4.0, 4.0, 0.1)) EXPECT_LE(kernel_mean_gaussian(d, k, t), peak);
}

TEST(KernelMeanGaussian, MatchesQuadrature) {
  const KernelConfig k(0.6);
  const Gaussian1d d{-0.3, 1.7};
  for (double t : {-2.0, 0.0, 0.9, 3.1}) {
    // Midpoint rule over +-12 standard deviations.
    const double sd = std::sqrt(d.var), lo = d.mean - 12 * sd, h = 24 * sd / 200000;
    double s = 0.0;
    for (int i = 0; i < 200000; ++i) {
      const double x = lo + (i + 0.5) * h;
      const double dens = std::exp(-(x - d.mean) * (x - d.mean) / (2 * d.var)) / std::sqrt(2 * std::numbers::pi * d.var);
      s += k((x - t) * (x - t)) * dens * h;
    }
    EXPECT_NEAR(kernel_mean_gaussian(d, k, t), s, 1e-6) << t;
  }
}

TEST(PoweredArgmax, SymmetricProblemStaysAtSampleMean) {
  const ConjugateProblem p{1.0, 4.0, 1.0, {0.0, 2.0}};
  for (const auto& a : powered_argmax_path(p, KernelConfig(1.0), {0, 1, 4, 16}, grid(-2, 4, 0.01)))
    EXPECT_NEAR(a.argmax, 1.0, 1e-9);
}

TEST(PoweredArgmax, ArgmaxApproachesMle) {
  const double step = 1e-3;
  const auto pts = powered_argmax_path(single_observation(), KernelConfig(1.0), {1, 2, 4, 8, 16, 32, 64}, grid(-1, 3, step));
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LE(std::abs(pts[i].argmax - 1.0), std::abs(pts[i - 1].argmax - 1.0));
  EXPECT_LT(std::abs(pts.back().argmax - 1.0), step);
  EXPECT_NEAR(powered_posterior_params(single_observation(), 64).mean, 64.0 / 64.01, 1e-15);
}

TEST(PoweredArgmax, EmptyGridThrows) {
  EXPECT_THROW(powered_argmax_path(single_observation(), KernelConfig(1.0), {1}, {}), ContractViolation);
}

// Properties ---------------------------------------------------------------------

TEST(OracleProperties, PosteriorVarianceShrinksAndMeanMovesTowardsMle) {
  for_cases(501, 50, [](Gen& g, int) {
    ConjugateProblem p{g.uniform(-5, 5), g.log_uniform(-1, 2), g.log_uniform(-1, 1), {}};
    for (int i = 0, m = g.integer(1, 10); i < m; ++i) p.observations.push_back(g.uniform(-5, 5));
    double prev_gap = std::abs(p.prior_mean - p.mle()), prev_var = p.prior_var;
    for (int n = 1; n <= 64; n *= 2) {
      const auto post = powered_posterior_params(p, n);
      EXPECT_LE(std::abs(post.mean - p.mle()), prev_gap + 1e-12);
      EXPECT_LT(post.var, prev_var);
      prev_gap = std::abs(post.mean - p.mle());
      prev_var = post.var;
    }
  });
}

TEST(OracleProperties, KernelMeanBoundedByOne) {
  for_cases(502, 100, [](Gen& g, int) {
    const double v = g.uniform(0, 5);
    const double km = kernel_mean_gaussian({g.uniform(-3, 3), v}, KernelConfig(g.log_uniform(-1, 1)), g.uniform(-5, 5));
    EXPECT_GT(km, 0.0);
    EXPECT_LE(km, 1.0);
  });
}
