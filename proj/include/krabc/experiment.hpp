#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "krabc/config.hpp"
#include "krabc/config_json.hpp"
#include "krabc/parallel.hpp"
#include "krabc/recursive_abc.hpp"

namespace krabc {

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double param_error = std::numeric_limits<double>::quiet_NaN();
  double data_error = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mu_error;  // mixture only
  double wall_s = 0.0;
  ParamPoint estimate;
  RunTrace trace;
  std::optional<RunConfig> selected;  // with hyperparameter selection
};

struct ExperimentResult {
  std::vector<std::string> param_names;
  bool has_mu_error = false;
  std::vector<TrialResult> trials;

  bool all_failed() const {
    for (const auto& t : trials)
      if (!t.failed) return false;
    return true;
  }
};

/// Reads a numeric CSV; rows are observations. A first line that does not
/// parse as numbers is treated as a header.
inline Dataset read_observed_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("observed_csv", "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("observed_csv", "non-numeric row in " + path + ": " + line);
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("observed_csv", "ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("observed_csv", "no data rows in " + path);
  Dataset d(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return d;
}

inline std::uint64_t trial_seed(const ExperimentConfig& c, int trial) {
  return c.master_seed + static_cast<std::uint64_t>(trial);
}

/// Observed data of one trial: simulated at the true parameter with a seed
/// derived from the trial seed.
inline Dataset observed_for_trial(const ExperimentConfig& c, const SimulatorSpec& sim, std::uint64_t seed) {
  if (!c.truth) throw ConfigError("truth", "required to simulate observed data");
  return sim.simulate(*c.truth, derive_seed({seed, tag("observed")}));
}

struct Scores {
  double param_error = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mu_error;
};

/// Per-experiment error metrics: sorted mixture errors, mean squared error
/// for alpha-stable, relative error otherwise. NaN without a truth.
inline Scores score_estimate(const ExperimentConfig& c, const ParamPoint& estimate) {
  Scores s;
  if (c.simulator.kind == SimulatorKind::GaussianMixture) s.mu_error = std::numeric_limits<double>::quiet_NaN();
  if (!c.truth) return s;
  const auto& truth = *c.truth;
  switch (c.simulator.kind) {
    case SimulatorKind::GaussianMixture: {
      const int k = c.simulator.components;
      std::vector<double> phi, mu;
      for (int i = 0; i < k; ++i)
        if (truth(i) > 0.0) {
          phi.push_back(truth(i));
          mu.push_back(truth(k + i));
        }
      const auto e = sorted_mixture_error(estimate.head(k), estimate.tail(k),
                                          Eigen::Map<const Vector>(phi.data(), static_cast<Eigen::Index>(phi.size())),
                                          Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size())));
      s.param_error = e.phi_error;
      s.mu_error = e.mu_error;
      break;
    }
    case SimulatorKind::AlphaStable:
      s.param_error = mean_squared_error(estimate, truth);
      break;
    default:
      s.param_error = parameter_error(estimate, truth).value;
  }
  return s;
}

/// One trial: observed data, optional hyperparameter selection, the run and
/// its scores. Aborted runs come back as failed rows.
inline TrialResult run_trial(const ExperimentConfig& c, int trial, int inner_jobs,
                             const std::optional<Dataset>& observed_override = std::nullopt) {
  TrialResult out;
  out.trial = trial;
  out.seed = trial_seed(c, trial);
  const auto started = std::chrono::steady_clock::now();
  try {
    RunConfig rc = to_run_config(c, out.seed);
    rc.jobs = inner_jobs;
    const Dataset observed = observed_override ? *observed_override : observed_for_trial(c, rc.simulator, out.seed);
    if (c.selection) {
      const auto& s = *c.selection;
      const HyperGrid grid{s.y_multipliers, s.theta_multipliers, s.deltas};
      rc = select_hyperparameters(rc, observed, grid, derive_seed({s.split_seed, out.seed}), s.time_series).best;
      out.selected = rc;
    }
    out.trace = run_krabc(rc, observed);
    out.estimate = out.trace.final_estimate;
    const auto scores = score_estimate(c, out.estimate);
    out.param_error = scores.param_error;
    out.mu_error = scores.mu_error;
    out.data_error = c.run.trace_data_error
                         ? out.trace.records.back().data_error
                         : data_error(rc.simulator, out.estimate, observed, derive_seed({out.seed, tag("data-error")}));
  } catch (const RunAborted& e) {
    out.failed = true;
    out.failure = e.what();
    out.trace = e.trace();
  } catch (const std::exception& e) {
    out.failed = true;
    out.failure = e.what();
  }
  out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

/// Runs every trial on a pool of `c.jobs` workers. With fewer trials than
/// workers the spare workers go to the per-particle simulations instead.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  validate(c);
  ExperimentResult res;
  res.param_names = make_simulator(c.simulator).param_names;
  res.has_mu_error = c.simulator.kind == SimulatorKind::GaussianMixture;
  std::optional<Dataset> observed;
  if (!c.observed_csv.empty()) observed = read_observed_csv(c.observed_csv);
  res.trials.resize(static_cast<std::size_t>(c.trials));
  const int outer = std::min(c.jobs, c.trials);
  const int inner = outer > 1 ? 1 : c.jobs;
  parallel_for(res.trials.size(), outer,
               [&](std::size_t i) { res.trials[i] = run_trial(c, static_cast<int>(i), inner, observed); });
  return res;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string results_header(const ExperimentResult& r) {
  std::string h = "trial,seed,param_error,data_error,wall_s";
  for (const auto& n : r.param_names) h += "," + n;
  if (r.has_mu_error) h += ",mu_error";
  return h;
}

/// results.csv. `wall_s` is written as 0 unless `timing` is set, so that
/// reruns reproduce the file byte for byte; timing.csv holds the measured times.
inline std::string results_csv(const ExperimentResult& r, bool timing = false) {
  std::string out = results_header(r) + "\n";
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& t : r.trials) {
    out += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + format_number(t.param_error) + "," +
           format_number(t.data_error) + "," + format_number(timing ? t.wall_s : 0.0);
    for (std::size_t k = 0; k < r.param_names.size(); ++k)
      out += "," + format_number(t.failed ? nan : t.estimate(static_cast<Eigen::Index>(k)));
    if (r.has_mu_error) out += "," + format_number(t.mu_error.value_or(nan));
    out += "\n";
  }
  return out;
}

inline std::string trace_csv(const ExperimentResult& r) {
  std::string out =
      "trial,seed,iteration,sum_of_weights,data_error,y_bandwidth,theta_bandwidth,particle_spread,herded_spread,"
      "diverged,y_bandwidth_fallback,theta_bandwidth_fallback";
  for (const auto& n : r.param_names) out += "," + n;
  out += "\n";
  for (const auto& t : r.trials)
    for (const auto& rec : t.trace.records) {
      out += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + std::to_string(rec.iteration) + "," +
             format_number(rec.sum_of_weights) + "," + format_number(rec.data_error) + "," +
             format_number(rec.y_bandwidth) + "," + format_number(rec.theta_bandwidth) + "," +
             format_number(rec.particle_spread) + "," + format_number(rec.herded_spread) + "," +
             std::to_string(rec.diverged) + "," + (rec.y_bandwidth_fallback ? "1" : "0") + "," +
             (rec.theta_bandwidth_fallback ? "1" : "0");
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(r.param_names.size()); ++k)
        out += "," + format_number(k < rec.estimate.size() ? rec.estimate(k) : std::numeric_limits<double>::quiet_NaN());
      out += "\n";
    }
  return out;
}

struct SummaryRow {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single trial
  int count = 0;
  std::string note;
};

inline std::vector<SummaryRow> summarize_trials(const ExperimentResult& r, bool timing = false) {
  std::vector<std::pair<std::string, std::vector<double>>> cols{{"param_error", {}}, {"data_error", {}}, {"wall_s", {}}};
  if (r.has_mu_error) cols.push_back({"mu_error", {}});
  for (const auto& n : r.param_names) cols.push_back({n, {}});
  for (const auto& t : r.trials) {
    if (t.failed) continue;
    std::size_t c = 0;
    cols[c++].second.push_back(t.param_error);
    cols[c++].second.push_back(t.data_error);
    cols[c++].second.push_back(timing ? t.wall_s : 0.0);
    if (r.has_mu_error) cols[c++].second.push_back(t.mu_error.value_or(std::numeric_limits<double>::quiet_NaN()));
    for (Eigen::Index k = 0; k < t.estimate.size(); ++k) cols[c++].second.push_back(t.estimate(k));
  }
  std::vector<SummaryRow> rows;
  for (const auto& [name, v] : cols) {
    SummaryRow row{name, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                   static_cast<int>(v.size()), ""};
    if (!v.empty()) {
      double s = 0.0;
      for (double x : v) s += x;
      row.mean = s / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean) * (x - row.mean);
      row.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    if (v.size() == 1) row.note = "single-trial";
    if (v.empty()) row.note = "no-successful-trials";
    rows.push_back(row);
  }
  return rows;
}

inline std::string summary_csv(const ExperimentResult& r, bool timing = false) {
  std::string out = "metric,mean,std,count,note\n";
  for (const auto& row : summarize_trials(r, timing))
    out += row.metric + "," + format_number(row.mean) + "," + format_number(row.std) + "," + std::to_string(row.count) +
           "," + row.note + "\n";
  return out;
}

inline std::string timing_csv(const ExperimentResult& r) {
  std::string out = "trial,seed,wall_s,failed\n";
  for (const auto& t : r.trials)
    out += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + format_number(t.wall_s) + "," +
           (t.failed ? "1" : "0") + "\n";
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

/// Writes config.json, results.csv, trace.csv, summary.csv and timing.csv
/// into `dir`, creating it if needed.
inline void write_outputs(const ExperimentConfig& c, const ExperimentResult& r, const std::filesystem::path& dir,
                          bool timing = false) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", serialize_config(c));
  write_text(dir / "results.csv", results_csv(r, timing));
  write_text(dir / "trace.csv", trace_csv(r));
  write_text(dir / "summary.csv", summary_csv(r, timing));
  write_text(dir / "timing.csv", timing_csv(r));
}

// ---------------------------------------------------------------------------
// Dry-run validation
// ---------------------------------------------------------------------------

struct ValidationItem {
  std::string check;
  bool ok = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationItem> items;
  long long simulations = 0;            // trials * n_iterations * n_particles
  long long selection_simulations = 0;  // extra runs of hyperparameter selection

  bool ok() const {
    for (const auto& i : items)
      if (!i.ok) return false;
    return true;
  }

  std::string str() const {
    std::string out;
    for (const auto& i : items) out += std::string(i.ok ? "ok    " : "FAIL  ") + i.check + ": " + i.detail + "\n";
    out += "estimated simulations: " + std::to_string(simulations);
    if (selection_simulations > 0) out += " (+" + std::to_string(selection_simulations) + " for selection)";
    return out + "\n";
  }
};

/// Dry-run checks. Never throws; every problem becomes a failed item.
inline ValidationReport validate_experiment(const ExperimentConfig& c) {
  ValidationReport rep;
  auto add = [&](std::string check, bool ok, std::string detail) {
    rep.items.push_back({std::move(check), ok, std::move(detail)});
  };
  try {
    validate(c);
    add("config", true, c.experiment + " at " + c.scale + " scale, " + std::to_string(c.trials) + " trials");
  } catch (const std::exception& e) {
    add("config", false, e.what());
    return rep;
  }
  const RunConfig rc = to_run_config(c, c.master_seed);
  const auto& sim = rc.simulator;

  if (c.simulator.kind == SimulatorKind::AlphaStable && c.truth) {
    const bool pd = alpha_stable_q_positive_definite((*c.truth)(1), (*c.truth)(2), c.simulator.dim);
    add("truth", pd, pd ? "Q positive definite" : "Q = (q_diag, q_offdiag) is not positive definite for d = " +
                                                      std::to_string(c.simulator.dim));
  }

  ParamPoint draw;
  try {
    draw = sample_prior(c.prior, derive_seed({c.master_seed, tag("validate")}));
    add("prior", draw.allFinite(), "dimension " + std::to_string(draw.size()));
  } catch (const std::exception& e) {
    add("prior", false, e.what());
  }

  auto smoke = [&](const std::string& what, const ParamPoint& natural) {
    try {
      const Dataset y = sim.simulate(natural, derive_seed({c.master_seed, tag("smoke")}));
      const Vector s = summarize(y, fit_summarizer(c.summarizer, y));
      add("simulator", y.allFinite(), what + ": " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                                          " dataset, summary length " + std::to_string(s.size()));
    } catch (const std::exception& e) {
      add("simulator", false, what + ": " + e.what());
    }
  };
  if (c.truth) smoke("at truth", *c.truth);
  if (draw.size() == sim.param_dim) {
    try {
      smoke("at a prior draw", to_natural(sim, to_working(sim, draw)));
    } catch (const InvalidParameter& e) {
      add("simulator", true, std::string("prior draw outside the admissible domain (dropped during runs): ") + e.what());
    }
  }

  if (!c.observed_csv.empty()) {
    try {
      const auto d = read_observed_csv(c.observed_csv);
      add("observed_csv", d.cols() == sim.obs_dim,
          std::to_string(d.rows()) + " rows, " + std::to_string(d.cols()) + " columns (simulator emits " +
              std::to_string(sim.obs_dim) + ")");
    } catch (const std::exception& e) {
      add("observed_csv", false, e.what());
    }
  }

  const long long per_run = static_cast<long long>(c.run.n_iterations) * c.run.n_particles;
  rep.simulations = static_cast<long long>(c.trials) * per_run;
  if (c.selection) {
    auto n = [](const std::vector<double>& v) { return v.empty() ? 1LL : static_cast<long long>(v.size()); };
    const long long cand = n(c.selection->y_multipliers) * n(c.selection->theta_multipliers) * n(c.selection->deltas);
    rep.selection_simulations = static_cast<long long>(c.trials) * cand * per_run;
    add("selection grid", true, std::to_string(cand) + " candidates");
  } else {
    add("selection grid", true, "none (fixed hyperparameters)");
  }

  try {
    const std::filesystem::path dir(c.output_dir);
    if (std::filesystem::exists(dir)) {
      add("output_dir", std::filesystem::is_directory(dir), c.output_dir + " exists");
    } else {
      std::filesystem::create_directories(dir);
      add("output_dir", true, c.output_dir + " created");
    }
  } catch (const std::exception& e) {
    add("output_dir", false, e.what());
  }
  return rep;
}

}  // namespace krabc
