#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "krabc/config.hpp"
#include "krabc/recursive_abc.hpp"
#include "support/generators.hpp"

using namespace krabc;
using krabc::testing::for_cases;
using krabc::testing::Gen;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

RunConfig identity_config(std::uint64_t seed) { return to_run_config(bundle("custom"), seed); }

RunConfig misspecified_1d(std::uint64_t seed) {
  SimulatorConfig sc;
  sc.kind = SimulatorKind::GaussianMean;
  sc.dim = 1;
  sc.n_obs = 100;
  sc.cov_diag = 40.0;
  RunConfig c;
  c.simulator = make_simulator(sc);
  c.prior.blocks = {UniformBoxPrior{Vector::Constant(1, 2000.0), Vector::Constant(1, 3000.0)}};
  c.summarizer.kind = SummaryKind::Mean;
  c.n_particles = 100;
  c.n_iterations = 10;
  c.master_seed = seed;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void expect_same_trace(const RunTrace& a, const RunTrace& b) {
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto &x = a.records[i], &y = b.records[i];
    EXPECT_EQ(x.estimate, y.estimate);
    EXPECT_EQ(x.sum_of_weights, y.sum_of_weights);
    EXPECT_EQ(x.y_bandwidth, y.y_bandwidth);
    EXPECT_EQ(x.theta_bandwidth, y.theta_bandwidth);
    EXPECT_EQ(x.particle_spread, y.particle_spread);
    EXPECT_EQ(x.herded_spread, y.herded_spread);
    EXPECT_TRUE(x.data_error == y.data_error || (std::isnan(x.data_error) && std::isnan(y.data_error)));
  }
  EXPECT_EQ(a.final_estimate, b.final_estimate);
}

}  // namespace

TEST(RunKrabc, IdentitySimulatorRecoversTruth) {
  const auto tr = run_krabc(identity_config(0), sim_identity(Vector::Constant(1, 1.0)));
  ASSERT_EQ(tr.records.size(), 5u);
  EXPECT_LT(std::abs(tr.final_estimate(0) - 1.0), 0.05);
}

TEST(RunKrabc, TraceInvariants) {
  auto cfg = identity_config(3);
  cfg.keep_particles = true;
  const auto tr = run_krabc(cfg, sim_identity(Vector::Constant(1, 1.0)));
  ASSERT_EQ(static_cast<int>(tr.records.size()), cfg.n_iterations);
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    const auto& r = tr.records[i];
    EXPECT_EQ(r.iteration, static_cast<int>(i) + 1);
    EXPECT_EQ(r.estimate_working, r.herded.front());
    EXPECT_EQ(static_cast<int>(r.herded.size()), cfg.n_particles);
    EXPECT_NEAR(r.sum_of_weights, r.weights.sum(), 1e-12);
    if (i + 1 < tr.records.size()) {
      EXPECT_EQ(tr.records[i + 1].particles, r.herded);
    }
  }
  EXPECT_EQ(tr.final_estimate, tr.records.back().herded.front());
}

TEST(RunKrabc, SingleIterationIsKernelAbcArgmax) {
  auto cfg = identity_config(5);
  cfg.n_iterations = 1;
  cfg.keep_particles = true;
  cfg.search.pool_size = 0;
  cfg.search.refine_steps = 0;
  const auto tr = run_krabc(cfg, sim_identity(Vector::Constant(1, 1.0)));
  const auto& r = tr.records.front();
  const WeightedParticleSet emb(r.particles, r.weights, KernelConfig(r.theta_bandwidth));
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.particles.size(); ++i)
    if (emb(r.particles[i]) > emb(r.particles[best])) best = i;
  EXPECT_EQ(tr.final_estimate_working, r.particles[best]);
}

TEST(RunKrabc, DeterministicAcrossWorkerCounts) {
  auto a = bundle("blowfly");
  a.simulator.T = 300;
  a.run.n_particles = 20;
  a.run.n_iterations = 3;
  auto cfg = to_run_config(a, 11);
  const Dataset obs = cfg.simulator.simulate(*a.truth, 99);
  const auto t1 = run_krabc(cfg, obs);
  cfg.jobs = 4;
  const auto t4 = run_krabc(cfg, obs);
  expect_same_trace(t1, t4);
  expect_same_trace(t1, run_krabc(cfg, obs));
}

TEST(RunKrabc, MisspecifiedPriorAutoCorrects) {
  const Dataset obs = sim_gaussian_mean(Vector::Zero(1), 100, 40.0, 2024);
  const auto tr = run_krabc(misspecified_1d(1), obs);
  EXPECT_LT(tr.records[0].sum_of_weights, 0.01);
  EXPECT_GT(tr.records[1].particle_spread, 1000.0);
  bool concentrated = false;
  for (const auto& r : tr.records) concentrated = concentrated || std::abs(r.estimate(0)) < 3.0 * std::sqrt(40.0 / 100);
  EXPECT_TRUE(concentrated);
}

TEST(RunKrabc, DegenerateWeightsWidenTheNextGeneration) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset obs = sim_gaussian_mean(Vector::Zero(1), 100, 40.0, 7 + seed);
    const auto tr = run_krabc(misspecified_1d(seed), obs);
    int triggered = 0;
    for (std::size_t i = 0; i + 1 < tr.records.size(); ++i)
      if (tr.records[i].sum_of_weights < 1e-3) {
        ++triggered;
        EXPECT_GE(tr.records[i + 1].particle_spread, tr.records[i].particle_spread) << "iteration " << i + 1;
      }
    EXPECT_GT(triggered, 0);
  }
}

TEST(RunKrabc, ConjugateErrorShrinksWithIterations) {
  auto a = bundle("conjugate-oracle");
  std::vector<double> first, last;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto cfg = to_run_config(a, s);
    cfg.trace_data_error = false;
    const Dataset obs = cfg.simulator.simulate(*a.truth, derive_seed({s, tag("observed")}));
    const double mle = obs.mean();
    const auto tr = run_krabc(cfg, obs);
    first.push_back(std::abs(tr.records.front().estimate(0) - mle));
    last.push_back(std::abs(tr.records.back().estimate(0) - mle));
  }
  EXPECT_LT(median(last), median(first));
}

TEST(RunKrabc, AllSimulationsFailing) {
  auto cfg = identity_config(0);
  cfg.simulator.simulate = [](const ParamPoint&, std::uint64_t) -> Dataset { throw SimulationDiverged("boom"); };
  try {
    run_krabc(cfg, sim_identity(Vector::Constant(1, 1.0)));
    FAIL() << "expected RunAborted";
  } catch (const RunAborted& e) {
    EXPECT_EQ(e.trace().records.size(), 1u);
    EXPECT_EQ(e.trace().records[0].diverged, cfg.n_particles);
  }
}

TEST(RunKrabc, Contract) {
  auto cfg = identity_config(0);
  EXPECT_THROW(run_krabc(cfg, Dataset(0, 1)), ContractViolation);
  EXPECT_THROW(run_krabc(cfg, Dataset::Zero(1, 2)), ContractViolation);
  cfg.n_particles = 1;
  EXPECT_THROW(run_krabc(cfg, Dataset::Zero(1, 1)), ContractViolation);
}

TEST(RunKrabc, FixedBandwidthsAreUsedVerbatim) {
  auto cfg = identity_config(2);
  cfg.y_bandwidth = BandwidthPolicy::fixed(0.3);
  cfg.theta_bandwidth = BandwidthPolicy::fixed(0.4);
  const auto tr = run_krabc(cfg, sim_identity(Vector::Constant(1, 1.0)));
  for (const auto& r : tr.records) {
    EXPECT_EQ(r.y_bandwidth, 0.3);
    EXPECT_EQ(r.theta_bandwidth, 0.4);
  }
}

// Hyperparameter selection --------------------------------------------------------

namespace {

RunConfig near_identity(std::uint64_t seed) {
  SimulatorConfig sc;
  sc.kind = SimulatorKind::GaussianMean;
  sc.dim = 1;
  sc.n_obs = 40;
  sc.cov_diag = 0.01;
  RunConfig c;
  c.simulator = make_simulator(sc);
  c.prior.blocks = {UniformBoxPrior{Vector::Constant(1, -5.0), Vector::Constant(1, 5.0)}};
  c.summarizer.kind = SummaryKind::Mean;
  c.n_particles = 40;
  c.n_iterations = 4;
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST(Selection, SingleCandidateReturnedUnchanged) {
  const auto tmpl = near_identity(1);
  const Dataset obs = sim_gaussian_mean(Vector::Constant(1, 3.0), 40, 0.01, 5);
  const auto r = select_hyperparameters(tmpl, obs, {}, 9);
  EXPECT_EQ(r.best_index, 0u);
  ASSERT_EQ(r.scores.size(), 1u);
  EXPECT_EQ(r.best.delta, tmpl.delta);
  EXPECT_EQ(r.best.y_bandwidth.multiplier, tmpl.y_bandwidth.multiplier);
}

TEST(Selection, AbsurdBandwidthLoses) {
  const Dataset obs = sim_gaussian_mean(Vector::Constant(1, 3.0), 40, 0.01, 5);
  HyperGrid g;
  g.y_multipliers = {1e6, 1.0};
  const auto r = select_hyperparameters(near_identity(1), obs, g, 9);
  EXPECT_EQ(r.best_index, 1u);
  EXPECT_EQ(r.best.y_bandwidth.multiplier, 1.0);
  EXPECT_LT(r.scores[1], r.scores[0]);
}

TEST(Selection, GridEnumerationOrder) {
  const Dataset obs = sim_gaussian_mean(Vector::Constant(1, 3.0), 40, 0.01, 5);
  HyperGrid g{{1.0, 2.0}, {0.5, 1.0, 2.0}, {1e-4, 1.0}};
  auto tmpl = near_identity(2);
  tmpl.n_iterations = 1;
  tmpl.n_particles = 10;
  const auto r = select_hyperparameters(tmpl, obs, g, 1);
  EXPECT_EQ(r.scores.size(), 12u);
  const double best = *std::min_element(r.scores.begin(), r.scores.end());
  EXPECT_EQ(r.scores[r.best_index], best);
  for (std::size_t i = 0; i < r.best_index; ++i) EXPECT_GT(r.scores[i], best);
}

TEST(Selection, EveryCandidateAborting) {
  auto tmpl = near_identity(0);
  tmpl.simulator.simulate = [](const ParamPoint&, std::uint64_t) -> Dataset { throw InvalidParameter("no"); };
  EXPECT_THROW(select_hyperparameters(tmpl, Dataset::Zero(8, 1), {}, 0), SelectionError);
}

TEST(SplitObserved, SizesAndOrder) {
  Dataset x(8, 1);
  for (int i = 0; i < 8; ++i) x(i, 0) = i;
  const auto [a, b] = split_observed(x, 0, true);
  EXPECT_EQ(a.rows(), 6);
  EXPECT_EQ(b.rows(), 2);
  EXPECT_EQ(b(0, 0), 6.0);
  const auto [c, d] = split_observed(x, 3, false);
  EXPECT_EQ(c.rows() + d.rows(), 8);
  EXPECT_DOUBLE_EQ(c.sum() + d.sum(), 28.0);
  EXPECT_THROW(split_observed(Dataset::Zero(1, 1), 0, false), ContractViolation);
}

// Error metrics ----------------------------------------------------------------------

TEST(ParameterError, Examples) {
  EXPECT_EQ(parameter_error(vec({1, 2}), vec({1, 2})).value, 0.0);
  EXPECT_DOUBLE_EQ(parameter_error(vec({2, 2}), vec({1, 2})).value, 0.5);
  EXPECT_NEAR(parameter_error(1.1 * vec({3, -4, 5}), vec({3, -4, 5})).value, 0.1, 1e-15);
  const auto z = parameter_error(vec({0.5, 2}), vec({0, 2}));
  EXPECT_TRUE(z.absolute_fallback);
  EXPECT_DOUBLE_EQ(z.value, 0.25);
  EXPECT_THROW(parameter_error(vec({1}), vec({1, 2})), ContractViolation);
}

TEST(MixtureError, Examples) {
  const Vector tp = vec({0.7, 0.3}), tm = vec({110, 70});
  const auto exact = sorted_mixture_error(vec({0.0, 0.3, 0.0, 0.7}), vec({5, 70, -9, 110}), tp, tm);
  EXPECT_EQ(exact.phi_error, 0.0);
  EXPECT_EQ(exact.mu_error, 0.0);
  const auto even = sorted_mixture_error(vec({0.5, 0.5, 0, 0}), vec({110, 70, 0, 0}), tp, tm);
  EXPECT_NEAR(even.phi_error, std::sqrt(0.08), 1e-15);
  const auto redundant = sorted_mixture_error(vec({0.7, 0.3, 0, 0}), vec({110, 70, 1e6, -1e6}), tp, tm);
  EXPECT_EQ(redundant.mu_error, 0.0);
}

// Properties -------------------------------------------------------------------------

TEST(KrabcProperties, RepeatedRunsAreIdentical) {
  for_cases(601, 5, [](Gen& g, int) {
    auto cfg = identity_config(static_cast<std::uint64_t>(g.integer(0, 1 << 20)));
    cfg.n_particles = g.integer(2, 30);
    cfg.n_iterations = g.integer(1, 4);
    const Dataset obs = sim_identity(Vector::Constant(1, g.uniform(-4, 4)));
    const auto a = run_krabc(cfg, obs);
    cfg.jobs = g.integer(2, 6);
    expect_same_trace(a, run_krabc(cfg, obs));
  });
}

TEST(KrabcProperties, ParameterErrorScaleInvariant) {
  for_cases(602, 50, [](Gen& g, int) {
    const auto d = g.integer(1, 6);
    Vector t = g.vector(d, 3.0), e = g.vector(d, 3.0);
    const double a = g.log_uniform(-3, 3);
    EXPECT_NEAR(parameter_error(a * e, a * t).value, parameter_error(e, t).value, 1e-9 * (1 + parameter_error(e, t).value));
  });
}

TEST(KrabcProperties, MixtureErrorPermutationInvariant) {
  for_cases(603, 50, [](Gen& g, int) {
    Vector phi(4), mu = g.vector(4, 50.0);
    for (int i = 0; i < 4; ++i) phi(i) = g.uniform(0, 1) + 0.01 * i;
    phi /= phi.sum();
    std::vector<int> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), g.rng());
    Vector pphi(4), pmu(4);
    for (int i = 0; i < 4; ++i) pphi(i) = phi(perm[i]), pmu(i) = mu(perm[i]);
    const Vector tp = vec({0.7, 0.3}), tm = vec({110, 70});
    const auto a = sorted_mixture_error(phi, mu, tp, tm), b = sorted_mixture_error(pphi, pmu, tp, tm);
    EXPECT_NEAR(a.phi_error, b.phi_error, 1e-12);
    EXPECT_NEAR(a.mu_error, b.mu_error, 1e-12);
  });
}
