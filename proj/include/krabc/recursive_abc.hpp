#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "krabc/discrepancy.hpp"
#include "krabc/errors.hpp"
#include "krabc/herding.hpp"
#include "krabc/kabc.hpp"
#include "krabc/kernels.hpp"
#include "krabc/models.hpp"
#include "krabc/parallel.hpp"
#include "krabc/random.hpp"
#include "krabc/types.hpp"

namespace krabc {

struct BandwidthPolicy {
  enum class Kind { Fixed, Median };
  Kind kind = Kind::Median;
  double value = 1.0;       // Fixed: the bandwidth itself
  double multiplier = 1.0;  // Median: scales the per-iteration median heuristic

  static BandwidthPolicy fixed(double v) { return {Kind::Fixed, v, 1.0}; }
  static BandwidthPolicy median(double m = 1.0) { return {Kind::Median, 1.0, m}; }

  bool operator==(const BandwidthPolicy&) const = default;
};

/// Herding search settings. Without an explicit `box`, each iteration
/// searches the bounding box of the current particles widened by `inflate`
/// times its width on every side, clamped to the simulator bounds.
struct SearchPolicy {
  int pool_size = 128;
  int refine_steps = 8;
  int refine_pool = 16;
  double perturb_scale = 0.1;
  double inflate = 0.5;
  std::vector<Interval> box;
};

struct RunConfig {
  SimulatorSpec simulator;
  PriorSpec prior;
  Summarizer summarizer;
  int n_particles = 100;
  int n_iterations = 10;
  double delta = 0.01;
  BandwidthPolicy theta_bandwidth = BandwidthPolicy::median();
  BandwidthPolicy y_bandwidth = BandwidthPolicy::median();
  SearchPolicy search;
  std::uint64_t master_seed = 0;
  bool trace_data_error = true;
  bool keep_particles = false;  // store particles, weights and herded points per iteration
  int jobs = 1;

  void validate() const {
    simulator.validate();
    prior.validate();
    summarizer.validate();
    if (prior.dim() != simulator.param_dim)
      throw ContractViolation("run config: prior dimension " + std::to_string(prior.dim()) +
                              " != simulator parameter dimension " + std::to_string(simulator.param_dim));
    if (n_particles < 2) throw ContractViolation("run config: n_particles must be >= 2");
    if (n_iterations < 1) throw ContractViolation("run config: n_iterations must be >= 1");
    if (!(delta > 0.0)) throw ContractViolation("run config: delta must be positive");
    for (const auto* b : {&theta_bandwidth, &y_bandwidth})
      if (!(b->value > 0.0) || !(b->multiplier > 0.0)) throw ContractViolation("run config: bandwidths must be positive");
    if (!(search.inflate >= 0.0)) throw ContractViolation("run config: search inflate must be >= 0");
    if (!search.box.empty() && static_cast<int>(search.box.size()) != simulator.param_dim)
      throw ContractViolation("run config: explicit search box has wrong dimension");
  }
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  double sum_of_weights = 0.0;
  ParamPoint estimate;          // first herded point, natural coordinates
  ParamPoint estimate_working;  // same point in working coordinates
  double data_error = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;
  double y_bandwidth = 0.0;
  double theta_bandwidth = 0.0;
  bool y_bandwidth_fallback = false;
  bool theta_bandwidth_fallback = false;
  double particle_spread = 0.0;  // mean per-coordinate range of this iteration's particles (working)
  double herded_spread = 0.0;    // same for the herded next generation
  int diverged = 0;
  std::vector<Interval> search_box;

  // Only with RunConfig::keep_particles.
  PointList particles;
  Vector weights;
  PointList herded;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  ParamPoint final_estimate;
  ParamPoint final_estimate_working;
};

/// Thrown when a run cannot continue; carries the trace up to the failure.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunTrace trace) : std::runtime_error(what), trace_(std::move(trace)) {}
  const RunTrace& trace() const noexcept { return trace_; }

 private:
  RunTrace trace_;
};

inline double mean_range(const PointList& pts) {
  if (pts.empty()) return 0.0;
  const Eigen::Index d = pts.front().size();
  Vector lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).sum() / static_cast<double>(d);
}

/// Energy distance (quadratic) between `observed` and one simulation at the
/// natural parameter `theta`; +inf when the simulation fails.
inline double data_error(const SimulatorSpec& sim, const ParamPoint& theta, const Dataset& observed, std::uint64_t seed) {
  try {
    const Dataset y = sim.simulate(theta, seed);
    return energy_distance_quadratic(observed, y).value;
  } catch (const SimulationDiverged&) {
    return std::numeric_limits<double>::infinity();
  } catch (const InvalidParameter&) {
    return std::numeric_limits<double>::infinity();
  }
}

namespace detail {

inline std::vector<Interval> herding_box(const RunConfig& cfg, const PointList& particles, double theta_bw) {
  if (!cfg.search.box.empty()) return cfg.search.box;
  const auto& bounds = cfg.simulator.bounds;
  const Eigen::Index d = particles.front().size();
  std::vector<Interval> box(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : particles) {
      lo = std::min(lo, p(k));
      hi = std::max(hi, p(k));
    }
    const double w = std::max(hi - lo, theta_bw);
    const auto& b = bounds[static_cast<std::size_t>(k)];
    Interval out{std::max(lo - cfg.search.inflate * w, b.lo), std::min(hi + cfg.search.inflate * w, b.hi)};
    if (!(out.lo < out.hi)) {
      // The particles sit outside or on the edge of the admissible range.
      const double c = std::clamp(0.5 * (lo + hi), b.lo, b.hi);
      out = {std::max(c - w, b.lo), std::min(c + w, b.hi)};
      if (!(out.lo < out.hi)) out = {c - w, c + w};
    }
    box[static_cast<std::size_t>(k)] = out;
  }
  return box;
}

}  // namespace detail

/// Kernel Recursive ABC.
///
/// Iteration 1 draws n particles from the prior; every iteration simulates
/// one dataset per particle, forms the kernel ABC embedding of the posterior
/// given the observed data and herds n new particles from it. The estimate
/// of each iteration is its first herded point; the run's estimate is that of
/// the last iteration. Deterministic in (cfg, observed) for any cfg.jobs.
///
/// Simulations that diverge or receive an inadmissible parameter get the
/// summarizer's diverged summary, or are left out of the embedding when the
/// summarizer has none. A degenerate median bandwidth reuses the previous
/// iteration's value; in the first iteration the y bandwidth falls back to
/// the median distance between the simulated and observed summaries. A run
/// aborts (RunAborted) only when every simulation of an iteration fails or no
/// bandwidth fallback applies.
inline RunTrace run_krabc(const RunConfig& cfg, const Dataset& observed) {
  cfg.validate();
  if (observed.rows() == 0) throw ContractViolation("run_krabc: observed dataset is empty");
  if (observed.cols() != cfg.simulator.obs_dim)
    throw ContractViolation("run_krabc: observed dimension " + std::to_string(observed.cols()) +
                            " != simulator obs_dim " + std::to_string(cfg.simulator.obs_dim));
  const Summarizer summarizer = fit_summarizer(cfg.summarizer, observed);
  const Vector observed_summary = summarize(observed, summarizer);
  const auto n = static_cast<std::size_t>(cfg.n_particles);
  const auto seed = cfg.master_seed;
  const auto& sim = cfg.simulator;

  RunTrace trace;
  PointList particles(n);
  {
    auto rng = make_rng(derive_seed({seed, tag("prior")}));
    for (auto& p : particles) p = to_working(sim, sample_prior(cfg.prior, rng));
  }

  std::optional<double> last_y_bw, last_theta_bw;
  for (int it = 1; it <= cfg.n_iterations; ++it) {
    const auto started = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iteration = it;

    std::vector<std::optional<Vector>> summaries(n);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
      const auto s = derive_seed({seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(i)});
      try {
        summaries[i] = summarize(sim.simulate(to_natural(sim, particles[i]), s), summarizer);
        if (!summaries[i]->allFinite()) summaries[i].reset();
      } catch (const SimulationDiverged&) {
        summaries[i].reset();
      } catch (const InvalidParameter&) {
        summaries[i].reset();
      }
    });

    const auto fallback = diverged_summary(summarizer, sim.obs_dim);
    PointList used_params, used_summaries;
    std::vector<std::size_t> used_index;
    for (std::size_t i = 0; i < n; ++i) {
      if (!summaries[i]) {
        ++rec.diverged;
        if (!fallback) continue;
        summaries[i] = *fallback;
      }
      used_index.push_back(i);
      used_params.push_back(particles[i]);
      used_summaries.push_back(*summaries[i]);
    }
    if (rec.diverged == static_cast<int>(n)) {
      trace.records.push_back(rec);
      throw RunAborted("iteration " + std::to_string(it) + ": all simulations diverged", std::move(trace));
    }

    // Degenerate medians reuse the last valid bandwidth. Before one exists,
    // `reference` points (the observed summary for k_Y) supply the median
    // distance from the point set to them instead.
    auto pick_bandwidth = [&](const BandwidthPolicy& policy, const PointList& pts, const Vector* reference,
                              std::optional<double>& last, bool& fell_back, const char* what) {
      if (policy.kind == BandwidthPolicy::Kind::Fixed) return policy.value;
      try {
        last = policy.multiplier *
               median_heuristic(pts, derive_seed({seed, static_cast<std::uint64_t>(it), tag(what)}));
      } catch (const DegenerateBandwidth&) {
        fell_back = true;
      } catch (const ContractViolation&) {
        fell_back = true;  // fewer than two points
      }
      if (!last && reference) {
        std::vector<double> d;
        for (const auto& p : pts) d.push_back((p - *reference).norm());
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
        const double m = d[d.size() / 2];
        if (m > 0.0 && std::isfinite(m)) last = policy.multiplier * m;
      }
      if (!last) {
        trace.records.push_back(rec);
        throw RunAborted(std::string("iteration ") + std::to_string(it) + ": degenerate " + what +
                             " bandwidth with no earlier value to fall back on",
                         std::move(trace));
      }
      return *last;
    };
    rec.y_bandwidth =
        pick_bandwidth(cfg.y_bandwidth, used_summaries, &observed_summary, last_y_bw, rec.y_bandwidth_fallback, "y");
    rec.theta_bandwidth =
        pick_bandwidth(cfg.theta_bandwidth, particles, nullptr, last_theta_bw, rec.theta_bandwidth_fallback, "theta");

    const KernelConfig ky(rec.y_bandwidth), ktheta(rec.theta_bandwidth);
    WeightedParticleSet embedding = [&] {
      if (used_params.size() >= 2)
        return embed_posterior(used_params, used_summaries, observed_summary, ky, ktheta, cfg.delta);
      // A single usable simulation: the 1x1 ridge system.
      Matrix g = Matrix::Ones(1, 1);
      Vector kv(1);
      kv(0) = gaussian_kernel(used_summaries[0], observed_summary, ky);
      return WeightedParticleSet(used_params, kabc_weights(g, kv, cfg.delta), ktheta);
    }();
    rec.sum_of_weights = embedding.weight_sum();
    rec.particle_spread = mean_range(particles);

    SearchConfig search;
    search.box = detail::herding_box(cfg, particles, rec.theta_bandwidth);
    search.pool_size = cfg.search.pool_size;
    search.refine_steps = cfg.search.refine_steps;
    search.refine_pool = cfg.search.refine_pool;
    search.perturb_scale = cfg.search.perturb_scale;
    rec.search_box = search.box;

    auto herded = herd(embedding, cfg.n_particles, search, derive_seed({seed, static_cast<std::uint64_t>(it), tag("herd")}));
    rec.estimate_working = herded.points.front();
    rec.estimate = to_natural(sim, rec.estimate_working);
    rec.herded_spread = mean_range(herded.points);
    if (cfg.trace_data_error)
      rec.data_error = data_error(sim, rec.estimate, observed, derive_seed({seed, static_cast<std::uint64_t>(it), tag("eval")}));

    if (cfg.keep_particles) {
      rec.particles = particles;
      rec.weights = Vector::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < used_index.size(); ++j)
        rec.weights(static_cast<Eigen::Index>(used_index[j])) = embedding.weights(static_cast<Eigen::Index>(j));
      rec.herded = herded.points;
    }
    particles = std::move(herded.points);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    trace.records.push_back(std::move(rec));
  }
  trace.final_estimate = trace.records.back().estimate;
  trace.final_estimate_working = trace.records.back().estimate_working;
  return trace;
}

// ---------------------------------------------------------------------------
// Hyperparameter selection
// ---------------------------------------------------------------------------

/// Candidate grid; candidates are enumerated with y multipliers outermost,
/// then theta multipliers, then deltas. An empty list keeps the template value.
struct HyperGrid {
  std::vector<double> y_multipliers;
  std::vector<double> theta_multipliers;
  std::vector<double> deltas;
};

struct SelectionResult {
  RunConfig best;
  std::size_t best_index = 0;
  std::vector<double> scores;  // held-out energy distance per candidate; +inf for aborted runs
};

/// Splits observed data 75/25. Records are shuffled with `seed` first; time
/// series keep their order and split at 75% of the length.
inline std::pair<Dataset, Dataset> split_observed(const Dataset& observed, std::uint64_t seed, bool time_series) {
  const Eigen::Index n = observed.rows();
  const Eigen::Index train = static_cast<Eigen::Index>(std::floor(0.75 * static_cast<double>(n)));
  if (train < 1 || train >= n) throw ContractViolation("split_observed: need at least 2 observations to split 75/25");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (!time_series) {
    auto rng = make_rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  Dataset a(train, observed.cols()), b(n - train, observed.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < train) a.row(i) = observed.row(order[static_cast<std::size_t>(i)]);
    else b.row(i - train) = observed.row(order[static_cast<std::size_t>(i)]);
  }
  return {a, b};
}

inline SelectionResult select_hyperparameters(const RunConfig& tmpl, const Dataset& observed, const HyperGrid& grid,
                                              std::uint64_t split_seed, bool time_series = false) {
  auto or_default = [](const std::vector<double>& v, double d) { return v.empty() ? std::vector<double>{d} : v; };
  const auto ys = or_default(grid.y_multipliers, tmpl.y_bandwidth.multiplier);
  const auto ts = or_default(grid.theta_multipliers, tmpl.theta_bandwidth.multiplier);
  const auto ds = or_default(grid.deltas, tmpl.delta);

  const auto [train, held_out] = split_observed(observed, split_seed, time_series);
  SelectionResult result{tmpl, 0, {}};
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double ym : ys)
    for (double tm : ts)
      for (double d : ds) {
        RunConfig c = tmpl;
        c.y_bandwidth.multiplier = ym;
        c.theta_bandwidth.multiplier = tm;
        c.delta = d;
        double score = std::numeric_limits<double>::infinity();
        try {
          const auto tr = run_krabc(c, train);
          score = data_error(c.simulator, tr.final_estimate, held_out, derive_seed({c.master_seed, tag("holdout")}));
          any = true;
        } catch (const RunAborted&) {
        }
        if (score < best) {
          best = score;
          result.best = c;
          result.best_index = result.scores.size();
        }
        result.scores.push_back(score);
      }
  if (!any) throw SelectionError("select_hyperparameters: every candidate run aborted");
  return result;
}

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

struct ParameterError {
  double value = 0.0;
  bool absolute_fallback = false;  // some truth coordinate was zero and used absolute error
};

/// Mean over coordinates of |est_i - true_i| / |true_i|.
inline ParameterError parameter_error(const ParamPoint& estimate, const ParamPoint& truth) {
  if (estimate.size() != truth.size() || truth.size() == 0)
    throw ContractViolation("parameter_error: dimension mismatch");
  ParameterError out;
  double s = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double diff = std::abs(estimate(i) - truth(i));
    if (truth(i) == 0.0) {
      out.absolute_fallback = true;
      s += diff;
    } else {
      s += diff / std::abs(truth(i));
    }
  }
  out.value = s / static_cast<double>(truth.size());
  return out;
}

inline double mean_squared_error(const ParamPoint& estimate, const ParamPoint& truth) {
  if (estimate.size() != truth.size()) throw ContractViolation("mean_squared_error: dimension mismatch");
  return (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
}

struct MixtureError {
  double phi_error = 0.0;
  double mu_error = 0.0;
};

/// Both parameter sets are sorted by descending weight. The weight error is
/// Euclidean over all estimated components (truth zero-padded); the mean
/// error covers only the top |truth_mu| components.
inline MixtureError sorted_mixture_error(const Vector& est_phi, const Vector& est_mu, const Vector& true_phi,
                                         const Vector& true_mu) {
  if (est_phi.size() != est_mu.size() || true_phi.size() < true_mu.size())
    throw ContractViolation("sorted_mixture_error: inconsistent sizes");
  if (est_phi.size() < true_mu.size() || est_phi.size() < true_phi.size())
    throw ContractViolation("sorted_mixture_error: estimate has fewer components than truth");
  auto order_by_phi = [](const Vector& phi) {
    std::vector<Eigen::Index> o(static_cast<std::size_t>(phi.size()));
    std::iota(o.begin(), o.end(), Eigen::Index{0});
    std::stable_sort(o.begin(), o.end(), [&](Eigen::Index a, Eigen::Index b) { return phi(a) > phi(b); });
    return o;
  };
  const auto eo = order_by_phi(est_phi);
  const auto to = order_by_phi(true_phi);
  MixtureError out;
  double s = 0.0;
  for (Eigen::Index i = 0; i < est_phi.size(); ++i) {
    const double t = i < true_phi.size() ? true_phi(to[static_cast<std::size_t>(i)]) : 0.0;
    s += std::pow(est_phi(eo[static_cast<std::size_t>(i)]) - t, 2);
  }
  out.phi_error = std::sqrt(s);
  s = 0.0;
  for (Eigen::Index i = 0; i < true_mu.size(); ++i)
    s += std::pow(est_mu(eo[static_cast<std::size_t>(i)]) - true_mu(to[static_cast<std::size_t>(i)]), 2);
  out.mu_error = std::sqrt(s);
  return out;
}

}  // namespace krabc
