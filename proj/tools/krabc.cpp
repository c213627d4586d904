#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "krabc/config.hpp"
#include "krabc/config_json.hpp"
#include "krabc/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAllFailed = 1;
constexpr int kExitConfig = 2;

const char* kFooter = R"(Outputs (written to the output directory):
  results.csv  trial,seed,param_error,data_error,wall_s,<one column per parameter>[,mu_error]
               wall_s is 0 unless --timing is given; mu_error only for the mixture experiment
  trace.csv    trial,seed,iteration,sum_of_weights,data_error,y_bandwidth,theta_bandwidth,
               particle_spread,herded_spread,diverged,y_bandwidth_fallback,
               theta_bandwidth_fallback,<one column per parameter>
  summary.csv  metric,mean,std,count,note
  timing.csv   trial,seed,wall_s,failed
  config.json  the fully resolved configuration

Exit codes: 0 success, 1 all trials failed, 2 configuration error.
KRABC_SEED overrides master_seed.)";

void apply_seed_override(krabc::ExperimentConfig& cfg) {
  const char* env = std::getenv("KRABC_SEED");
  if (!env) return;
  const std::string s(env);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || s.front() == '-')
    throw krabc::ConfigError("KRABC_SEED", "expected a non-negative integer, got \"" + s + "\"");
  cfg.master_seed = v;
}

void print_summary(const krabc::ExperimentResult& res, bool timing) {
  for (const auto& t : res.trials)
    if (t.failed) std::cerr << "trial " << t.trial << " (seed " << t.seed << ") failed: " << t.failure << "\n";
  for (const auto& row : krabc::summarize_trials(res, timing)) {
    if (row.metric == "wall_s" && !timing) continue;
    std::cout << row.metric << " " << krabc::format_number(row.mean) << " (" << krabc::format_number(row.std) << ")";
    if (!row.note.empty()) std::cout << " [" << row.note << "]";
    std::cout << "\n";
  }
}

int execute(krabc::ExperimentConfig cfg, int jobs, const std::string& out, bool timing) {
  apply_seed_override(cfg);
  if (jobs > 0) cfg.jobs = jobs;
  if (!out.empty()) cfg.output_dir = out;
  krabc::validate(cfg);
  const auto res = krabc::run_experiment(cfg);
  krabc::write_outputs(cfg, res, cfg.output_dir, timing);
  print_summary(res, timing);
  std::cout << "wrote " << cfg.output_dir << "\n";
  return res.all_failed() ? kExitAllFailed : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel recursive ABC point estimation"};
  app.footer(kFooter);
  app.require_subcommand(1);

  std::string config_path, out_dir, bench_name, scale = "desk";
  int jobs = 0, trials = 0;
  bool timing = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_flag("--timing", timing, "Record measured wall_s in results.csv");

  auto* val = app.add_subcommand("validate", "Dry-run checks of a config file");
  val->add_option("--config", config_path, "JSON config")->required();

  auto* bench = app.add_subcommand("bench", "Run a built-in experiment with its default settings");
  bench->add_option("experiment", bench_name, "Experiment name")
      ->required()
      ->check(CLI::IsMember(krabc::experiment_names()));
  bench->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
  bench->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  bench->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--out", out_dir, "Output directory");
  bench->add_flag("--timing", timing, "Record measured wall_s in results.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return execute(krabc::load_config(config_path), jobs, out_dir, timing);
    if (*val) {
      auto cfg = krabc::load_config(config_path);
      apply_seed_override(cfg);
      const auto rep = krabc::validate_experiment(cfg);
      std::cout << rep.str();
      return rep.ok() ? kExitOk : kExitConfig;
    }
    if (*bench) {
      auto cfg = krabc::bundle(bench_name, scale);
      if (trials > 0) cfg.trials = trials;
      return execute(cfg, jobs, out_dir, timing);
    }
  } catch (const krabc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAllFailed;
  }
  return kExitOk;
}
