#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "krabc/config.hpp"
#include "krabc/errors.hpp"

namespace krabc {

namespace detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(path, "integer out of range");
  return static_cast<int>(v);
}

inline std::uint64_t as_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw ConfigError(path, "expected a non-negative integer");
}

inline bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> as_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vector as_vector(const json& j, const std::string& path) {
  const auto v = as_list(j, path);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<Interval> as_intervals(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of [lo, hi] pairs");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    const auto v = as_list(j[i], p);
    if (v.size() != 2) throw ConfigError(p, "expected [lo, hi]");
    out.push_back({v[0], v[1]});
  }
  return out;
}

/// Visits the keys of one JSON object and rejects the ones nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class F>
  void field(const std::string& key, F&& read) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read(*it, join_path(path_, key));
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(join_path(path_, item.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline SimulatorKind simulator_kind_from(const std::string& s, const std::string& path) {
  if (s == "identity") return SimulatorKind::Identity;
  if (s == "gaussian-mean") return SimulatorKind::GaussianMean;
  if (s == "blowfly") return SimulatorKind::Blowfly;
  if (s == "alpha-stable") return SimulatorKind::AlphaStable;
  if (s == "gaussian-mixture") return SimulatorKind::GaussianMixture;
  throw ConfigError(path, "unknown simulator kind \"" + s + "\"");
}

inline std::string to_string(SimulatorKind k) {
  switch (k) {
    case SimulatorKind::Identity: return "identity";
    case SimulatorKind::GaussianMean: return "gaussian-mean";
    case SimulatorKind::Blowfly: return "blowfly";
    case SimulatorKind::AlphaStable: return "alpha-stable";
    case SimulatorKind::GaussianMixture: return "gaussian-mixture";
  }
  return "identity";
}

inline SummaryKind summary_kind_from(const std::string& s, const std::string& path) {
  if (s == "identity") return SummaryKind::Identity;
  if (s == "mean") return SummaryKind::Mean;
  if (s == "histogram") return SummaryKind::Histogram;
  if (s == "quantiles") return SummaryKind::Quantiles;
  throw ConfigError(path, "unknown summarizer kind \"" + s + "\"");
}

inline std::string to_string(SummaryKind k) {
  switch (k) {
    case SummaryKind::Identity: return "identity";
    case SummaryKind::Mean: return "mean";
    case SummaryKind::Histogram: return "histogram";
    case SummaryKind::Quantiles: return "quantiles";
  }
  return "identity";
}

inline void read_simulator(const json& j, const std::string& path, SimulatorConfig& s) {
  ObjectReader r(j, path);
  r.field("kind", [&](const json& v, const std::string& p) { s.kind = simulator_kind_from(as_string(v, p), p); });
  r.field("dim", [&](const json& v, const std::string& p) { s.dim = as_int(v, p); });
  r.field("n_obs", [&](const json& v, const std::string& p) { s.n_obs = as_int(v, p); });
  r.field("cov_diag", [&](const json& v, const std::string& p) { s.cov_diag = as_double(v, p); });
  r.field("T", [&](const json& v, const std::string& p) { s.T = as_int(v, p); });
  r.field("burn_in", [&](const json& v, const std::string& p) { s.burn_in = as_int(v, p); });
  r.field("amplitude", [&](const json& v, const std::string& p) {
    const auto a = as_string(v, p);
    if (a == "verbatim") s.amplitude = AmplitudeLaw::Verbatim;
    else if (a == "half-alpha") s.amplitude = AmplitudeLaw::HalfAlpha;
    else throw ConfigError(p, "expected \"verbatim\" or \"half-alpha\"");
  });
  r.field("components", [&](const json& v, const std::string& p) { s.components = as_int(v, p); });
  r.field("component_var", [&](const json& v, const std::string& p) { s.component_var = as_double(v, p); });
  r.field("mean_unit", [&](const json& v, const std::string& p) { s.mean_unit = as_double(v, p); });
  r.finish();
}

inline PriorBlock read_prior_block(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(path, "prior block needs a \"kind\"");
  const auto kind = as_string(j.at("kind"), join_path(path, "kind"));
  ObjectReader r(j, path);
  r.field("kind", [](const json&, const std::string&) {});
  if (kind == "uniform-box") {
    UniformBoxPrior b;
    r.field("lo", [&](const json& v, const std::string& p) { b.lo = as_vector(v, p); });
    r.field("hi", [&](const json& v, const std::string& p) { b.hi = as_vector(v, p); });
    r.finish();
    return b;
  }
  if (kind == "log-normal") {
    LogNormalPrior b;
    r.field("loc", [&](const json& v, const std::string& p) { b.loc = as_vector(v, p); });
    r.field("scale", [&](const json& v, const std::string& p) { b.scale = as_vector(v, p); });
    r.finish();
    return b;
  }
  if (kind == "dirichlet") {
    DirichletPrior b;
    r.field("size", [&](const json& v, const std::string& p) { b.size = as_int(v, p); });
    r.field("concentration", [&](const json& v, const std::string& p) { b.concentration = as_double(v, p); });
    r.field("scale", [&](const json& v, const std::string& p) { b.scale = as_double(v, p); });
    r.finish();
    return b;
  }
  if (kind == "normal") {
    NormalPrior b;
    r.field("mean", [&](const json& v, const std::string& p) { b.mean = as_vector(v, p); });
    r.field("var", [&](const json& v, const std::string& p) { b.var = as_vector(v, p); });
    r.finish();
    return b;
  }
  throw ConfigError(join_path(path, "kind"), "unknown prior kind \"" + kind + "\"");
}

inline void read_summarizer(const json& j, const std::string& path, Summarizer& s) {
  ObjectReader r(j, path);
  r.field("kind", [&](const json& v, const std::string& p) { s.kind = summary_kind_from(as_string(v, p), p); });
  r.field("bins", [&](const json& v, const std::string& p) { s.bins = as_int(v, p); });
  r.field("ranges", [&](const json& v, const std::string& p) { s.ranges = as_intervals(v, p); });
  r.field("levels", [&](const json& v, const std::string& p) { s.levels = as_list(v, p); });
  r.finish();
}

inline void read_bandwidth(const json& j, const std::string& path, BandwidthPolicy& b) {
  ObjectReader r(j, path);
  r.field("policy", [&](const json& v, const std::string& p) {
    const auto s = as_string(v, p);
    if (s == "median") b.kind = BandwidthPolicy::Kind::Median;
    else if (s == "fixed") b.kind = BandwidthPolicy::Kind::Fixed;
    else throw ConfigError(p, "expected \"median\" or \"fixed\"");
  });
  r.field("value", [&](const json& v, const std::string& p) { b.value = as_double(v, p); });
  r.field("multiplier", [&](const json& v, const std::string& p) { b.multiplier = as_double(v, p); });
  r.finish();
}

inline void read_search(const json& j, const std::string& path, SearchPolicy& s) {
  ObjectReader r(j, path);
  r.field("pool_size", [&](const json& v, const std::string& p) { s.pool_size = as_int(v, p); });
  r.field("refine_steps", [&](const json& v, const std::string& p) { s.refine_steps = as_int(v, p); });
  r.field("refine_pool", [&](const json& v, const std::string& p) { s.refine_pool = as_int(v, p); });
  r.field("perturb_scale", [&](const json& v, const std::string& p) { s.perturb_scale = as_double(v, p); });
  r.field("inflate", [&](const json& v, const std::string& p) { s.inflate = as_double(v, p); });
  r.field("box", [&](const json& v, const std::string& p) { s.box = as_intervals(v, p); });
  r.finish();
}

inline void read_run(const json& j, const std::string& path, RunSettings& s) {
  ObjectReader r(j, path);
  r.field("n_particles", [&](const json& v, const std::string& p) { s.n_particles = as_int(v, p); });
  r.field("n_iterations", [&](const json& v, const std::string& p) { s.n_iterations = as_int(v, p); });
  r.field("delta", [&](const json& v, const std::string& p) { s.delta = as_double(v, p); });
  r.field("theta_bandwidth", [&](const json& v, const std::string& p) { read_bandwidth(v, p, s.theta_bandwidth); });
  r.field("y_bandwidth", [&](const json& v, const std::string& p) { read_bandwidth(v, p, s.y_bandwidth); });
  r.field("search", [&](const json& v, const std::string& p) { read_search(v, p, s.search); });
  r.field("trace_data_error", [&](const json& v, const std::string& p) { s.trace_data_error = as_bool(v, p); });
  r.finish();
}

inline SelectionConfig read_selection(const json& j, const std::string& path) {
  SelectionConfig s;
  ObjectReader r(j, path);
  r.field("y_multipliers", [&](const json& v, const std::string& p) { s.y_multipliers = as_list(v, p); });
  r.field("theta_multipliers", [&](const json& v, const std::string& p) { s.theta_multipliers = as_list(v, p); });
  r.field("deltas", [&](const json& v, const std::string& p) { s.deltas = as_list(v, p); });
  r.field("split_seed", [&](const json& v, const std::string& p) { s.split_seed = as_u64(v, p); });
  r.field("time_series", [&](const json& v, const std::string& p) { s.time_series = as_bool(v, p); });
  r.finish();
  return s;
}

inline ordered_json vector_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline ordered_json intervals_json(const std::vector<Interval>& box) {
  ordered_json a = ordered_json::array();
  for (const auto& b : box) a.push_back({b.lo, b.hi});
  return a;
}

inline ordered_json bandwidth_json(const BandwidthPolicy& b) {
  return {{"policy", b.kind == BandwidthPolicy::Kind::Median ? "median" : "fixed"},
          {"value", b.value},
          {"multiplier", b.multiplier}};
}

}  // namespace detail

/// Every field with its resolved value, in schema order.
inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  using detail::ordered_json;
  ordered_json j;
  j["experiment"] = c.experiment;
  j["scale"] = c.scale;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["jobs"] = c.jobs;
  j["output_dir"] = c.output_dir;

  const auto& s = c.simulator;
  j["simulator"] = {{"kind", detail::to_string(s.kind)},
                    {"dim", s.dim},
                    {"n_obs", s.n_obs},
                    {"cov_diag", s.cov_diag},
                    {"T", s.T},
                    {"burn_in", s.burn_in},
                    {"amplitude", s.amplitude == AmplitudeLaw::Verbatim ? "verbatim" : "half-alpha"},
                    {"components", s.components},
                    {"component_var", s.component_var},
                    {"mean_unit", s.mean_unit}};

  ordered_json prior = ordered_json::array();
  for (const auto& b : c.prior.blocks) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, UniformBoxPrior>)
            prior.push_back({{"kind", "uniform-box"}, {"lo", detail::vector_json(p.lo)}, {"hi", detail::vector_json(p.hi)}});
          else if constexpr (std::is_same_v<T, LogNormalPrior>)
            prior.push_back(
                {{"kind", "log-normal"}, {"loc", detail::vector_json(p.loc)}, {"scale", detail::vector_json(p.scale)}});
          else if constexpr (std::is_same_v<T, DirichletPrior>)
            prior.push_back({{"kind", "dirichlet"}, {"size", p.size}, {"concentration", p.concentration}, {"scale", p.scale}});
          else
            prior.push_back({{"kind", "normal"}, {"mean", detail::vector_json(p.mean)}, {"var", detail::vector_json(p.var)}});
        },
        b);
  }
  j["prior"] = prior;

  j["summarizer"] = {{"kind", detail::to_string(c.summarizer.kind)},
                     {"bins", c.summarizer.bins},
                     {"ranges", detail::intervals_json(c.summarizer.ranges)},
                     {"levels", c.summarizer.levels}};

  const auto& r = c.run;
  j["run"] = {{"n_particles", r.n_particles},
              {"n_iterations", r.n_iterations},
              {"delta", r.delta},
              {"theta_bandwidth", detail::bandwidth_json(r.theta_bandwidth)},
              {"y_bandwidth", detail::bandwidth_json(r.y_bandwidth)},
              {"search",
               {{"pool_size", r.search.pool_size},
                {"refine_steps", r.search.refine_steps},
                {"refine_pool", r.search.refine_pool},
                {"perturb_scale", r.search.perturb_scale},
                {"inflate", r.search.inflate},
                {"box", detail::intervals_json(r.search.box)}}},
              {"trace_data_error", r.trace_data_error}};

  j["truth"] = c.truth ? detail::vector_json(*c.truth) : ordered_json(nullptr);
  j["observed_csv"] = c.observed_csv;
  if (c.selection) {
    const auto& sel = *c.selection;
    j["selection"] = {{"y_multipliers", sel.y_multipliers},
                      {"theta_multipliers", sel.theta_multipliers},
                      {"deltas", sel.deltas},
                      {"split_seed", sel.split_seed},
                      {"time_series", sel.time_series}};
  } else {
    j["selection"] = nullptr;
  }
  return j;
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Builds a config from JSON: the named experiment's bundle at the given
/// scale, then every present key applied on top. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::json;
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  if (!j.contains("experiment")) throw ConfigError("experiment", "missing required key");
  const auto name = detail::as_string(j.at("experiment"), "experiment");
  const auto scale = j.contains("scale") ? detail::as_string(j.at("scale"), "scale") : std::string("desk");
  ExperimentConfig c = bundle(name, scale);

  detail::ObjectReader r(j, "");
  r.field("experiment", [](const json&, const std::string&) {});
  r.field("scale", [](const json&, const std::string&) {});
  r.field("trials", [&](const json& v, const std::string& p) { c.trials = detail::as_int(v, p); });
  r.field("master_seed", [&](const json& v, const std::string& p) { c.master_seed = detail::as_u64(v, p); });
  r.field("jobs", [&](const json& v, const std::string& p) { c.jobs = detail::as_int(v, p); });
  r.field("output_dir", [&](const json& v, const std::string& p) { c.output_dir = detail::as_string(v, p); });
  r.field("simulator", [&](const json& v, const std::string& p) { detail::read_simulator(v, p, c.simulator); });
  r.field("prior", [&](const json& v, const std::string& p) {
    if (!v.is_array() || v.empty()) throw ConfigError(p, "expected a non-empty array of prior blocks");
    c.prior.blocks.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
      c.prior.blocks.push_back(detail::read_prior_block(v[i], p + "[" + std::to_string(i) + "]"));
  });
  r.field("summarizer", [&](const json& v, const std::string& p) { detail::read_summarizer(v, p, c.summarizer); });
  r.field("run", [&](const json& v, const std::string& p) { detail::read_run(v, p, c.run); });
  r.field("truth", [&](const json& v, const std::string& p) {
    if (v.is_null()) c.truth.reset();
    else c.truth = detail::as_vector(v, p);
  });
  r.field("observed_csv", [&](const json& v, const std::string& p) { c.observed_csv = detail::as_string(v, p); });
  r.field("selection", [&](const json& v, const std::string& p) {
    if (v.is_null()) c.selection.reset();
    else c.selection = detail::read_selection(v, p);
  });
  r.finish();
  validate(c);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", e.what());  // the message carries line and column
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace krabc
