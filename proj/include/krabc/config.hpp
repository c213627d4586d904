#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krabc/errors.hpp"
#include "krabc/models.hpp"
#include "krabc/recursive_abc.hpp"

namespace krabc {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"gauss-misspecified", "blowfly", "alpha-stable",
                                              "mixture", "conjugate-oracle", "custom"};
  return names;
}

/// Driver settings that are not part of the model bundle.
struct RunSettings {
  int n_particles = 100;
  int n_iterations = 10;
  double delta = 0.01;
  BandwidthPolicy theta_bandwidth = BandwidthPolicy::median();
  BandwidthPolicy y_bandwidth = BandwidthPolicy::median();
  SearchPolicy search;
  bool trace_data_error = true;
};

/// Optional per-trial hyperparameter selection on a 75/25 split.
struct SelectionConfig {
  std::vector<double> y_multipliers;
  std::vector<double> theta_multipliers;
  std::vector<double> deltas;
  std::uint64_t split_seed = 0;
  bool time_series = false;
};

struct ExperimentConfig {
  std::string experiment = "custom";
  std::string scale = "desk";
  int trials = 1;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  std::string output_dir;
  SimulatorConfig simulator;
  PriorSpec prior;
  Summarizer summarizer;
  RunSettings run;
  std::optional<Vector> truth;  // natural coordinates
  std::string observed_csv;     // empty: simulate the observed data from `truth`
  std::optional<SelectionConfig> selection;
};

/// Defaults for a named experiment at "desk" or "paper" scale. The two
/// scales differ in the number of trials only.
inline ExperimentConfig bundle(const std::string& name, const std::string& scale = "desk") {
  if (scale != "desk" && scale != "paper") throw ConfigError("scale", "must be \"desk\" or \"paper\", got \"" + scale + "\"");
  const bool paper = scale == "paper";
  ExperimentConfig c;
  c.experiment = name;
  c.scale = scale;
  c.output_dir = "results/" + name + "-" + scale;
  auto& r = c.run;
  if (name == "gauss-misspecified") {
    c.trials = paper ? 30 : 5;
    c.simulator.kind = SimulatorKind::GaussianMean;
    c.simulator.dim = 20;
    c.simulator.n_obs = 100;
    c.simulator.cov_diag = 40.0;
    c.prior.blocks = {UniformBoxPrior{Vector::Constant(20, 9e6), Vector::Constant(20, 1e7)}};
    c.summarizer.kind = SummaryKind::Mean;
    Vector t(20);
    t << 10, 50, 90, 130, 180, 280, 390, 430, 520, 630, 1010, 1050, 1090, 1130, 1180, 1280, 1390, 1430, 1520, 1630;
    c.truth = t;
    r.n_iterations = 30;
    r.delta = 1e-3;
    r.y_bandwidth = BandwidthPolicy::median(0.5);
  } else if (name == "blowfly") {
    c.trials = paper ? 30 : 5;
    c.simulator.kind = SimulatorKind::Blowfly;
    c.simulator.T = 1000;
    c.simulator.burn_in = 50;
    Vector loc(6), sd(6);
    loc << 2.0, 5.0, -0.5, -0.5, 2.0, -1.0;
    sd << 2.0, 0.5, 1.0, 1.0, 1.0, 0.4;
    c.prior.blocks = {LogNormalPrior{loc, sd}};
    c.summarizer.kind = SummaryKind::Histogram;
    c.summarizer.bins = 1000;
    Vector t(6);
    t << 29, 260, 0.6, 0.3, 7, 0.2;
    c.truth = t;
    r.n_iterations = 13;
  } else if (name == "alpha-stable") {
    c.trials = paper ? 30 : 10;
    c.simulator.kind = SimulatorKind::AlphaStable;
    c.simulator.dim = 2;
    c.simulator.n_obs = 1000;
    Vector lo(3), hi(3), t(3);
    lo << 0.0, 0.0, 0.0;
    hi << 2.0, 5.0, 5.0;
    t << 1.3, 1.0, 0.2;
    c.prior.blocks = {UniformBoxPrior{lo, hi}};
    c.summarizer.kind = SummaryKind::Quantiles;
    c.truth = t;
    r.n_iterations = 14;
  } else if (name == "mixture") {
    c.trials = paper ? 30 : 5;
    c.simulator.kind = SimulatorKind::GaussianMixture;
    c.simulator.components = 4;
    c.simulator.n_obs = 3000;
    c.simulator.component_var = 20.0;
    c.prior.blocks = {DirichletPrior{4, 0.01, 1.0}, NormalPrior{Vector::Zero(4), Vector::Constant(4, 100.0)}};
    c.summarizer.kind = SummaryKind::Histogram;
    c.summarizer.bins = 300;
    Vector t(8);
    t << 0.7, 0.3, 0.0, 0.0, 110.0, 70.0, 0.0, 0.0;
    c.truth = t;
    r.n_iterations = 10;
  } else if (name == "conjugate-oracle") {
    c.trials = paper ? 30 : 20;
    c.simulator.kind = SimulatorKind::GaussianMean;
    c.simulator.dim = 1;
    c.simulator.n_obs = 20;
    c.simulator.cov_diag = 1.0;
    c.prior.blocks = {NormalPrior{Vector::Zero(1), Vector::Constant(1, 0.1)}};
    c.summarizer.kind = SummaryKind::Mean;
    c.truth = Vector::Constant(1, 1.0);
    r.n_iterations = 8;
  } else if (name == "custom") {
    c.trials = paper ? 30 : 1;
    c.simulator.kind = SimulatorKind::Identity;
    c.prior.blocks = {UniformBoxPrior{Vector::Constant(1, -5.0), Vector::Constant(1, 5.0)}};
    c.summarizer.kind = SummaryKind::Identity;
    c.truth = Vector::Constant(1, 1.0);
    r.n_particles = 50;
    r.n_iterations = 5;
  } else {
    throw ConfigError("experiment", "unknown experiment \"" + name + "\"");
  }
  return c;
}

/// Driver configuration for one trial; `seed` becomes the master seed.
inline RunConfig to_run_config(const ExperimentConfig& c, std::uint64_t seed) {
  RunConfig r;
  r.simulator = make_simulator(c.simulator);
  r.prior = c.prior;
  r.summarizer = c.summarizer;
  r.n_particles = c.run.n_particles;
  r.n_iterations = c.run.n_iterations;
  r.delta = c.run.delta;
  r.theta_bandwidth = c.run.theta_bandwidth;
  r.y_bandwidth = c.run.y_bandwidth;
  r.search = c.run.search;
  r.trace_data_error = c.run.trace_data_error;
  r.master_seed = seed;
  return r;
}

/// Structural checks; throws ConfigError naming the offending field.
inline void validate(const ExperimentConfig& c) {
  bool known = false;
  for (const auto& n : experiment_names()) known = known || n == c.experiment;
  if (!known) throw ConfigError("experiment", "unknown experiment \"" + c.experiment + "\"");
  if (c.scale != "desk" && c.scale != "paper") throw ConfigError("scale", "must be \"desk\" or \"paper\"");
  if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (c.jobs < 1) throw ConfigError("jobs", "must be >= 1");
  RunConfig r;
  try {
    r = to_run_config(c, c.master_seed);
    r.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError("run", e.what());
  }
  if (c.truth && c.truth->size() != r.simulator.param_dim)
    throw ConfigError("truth", "has " + std::to_string(c.truth->size()) + " entries, simulator expects " +
                                   std::to_string(r.simulator.param_dim));
  if (!c.truth && c.observed_csv.empty()) throw ConfigError("truth", "required when observed_csv is not given");
  if (c.selection) {
    const auto& s = *c.selection;
    for (double v : s.y_multipliers)
      if (!(v > 0.0)) throw ConfigError("selection.y_multipliers", "entries must be positive");
    for (double v : s.theta_multipliers)
      if (!(v > 0.0)) throw ConfigError("selection.theta_multipliers", "entries must be positive");
    for (double v : s.deltas)
      if (!(v > 0.0)) throw ConfigError("selection.deltas", "entries must be positive");
  }
}

}  // namespace krabc
