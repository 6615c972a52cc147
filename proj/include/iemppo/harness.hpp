#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iemppo/trainer.hpp"

namespace iemppo {

using json = nlohmann::json;

struct RunConfig {
  std::string env = "pendulum";
  TrainerConfig trainer;
  long total_env_steps = 300000;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: keep results in memory only
  int checkpoint_every = 50;
  // Off writes seconds = 0 so reruns produce byte-identical metrics.
  bool record_wall_clock = true;

  std::vector<std::string> warnings;  // filled while resolving a config

  Algo algo() const { return trainer.algo; }
  void validate() const;
};

/// Defaults tuned per environment (reward anchors, noise scale).
RunConfig default_config(const std::string& env);

/// Flat JSON using the RunConfig field names. Keys absent from `doc` keep the
/// defaults of the named environment. Unknown keys are a ConfigError.
RunConfig config_from_json(const json& doc);
json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

inline constexpr const char* kMetricsHeader =
    "iter,steps,ret_mean,ret_min,ret_max,bonus_mean,sigma,epochs_run,kl,loss_pi,loss_v,loss_intrinsic,seconds";

std::string format_double(double x);
std::string metrics_line(const MetricsRow& row);

struct RunResult {
  std::vector<MetricsRow> rows;
  std::vector<EpisodeRecord> episodes;
  double final_window = 0.0;  // mean return over the last 100 episodes
  std::optional<long> first_goal_step;
  double wall_seconds = 0.0;  // always measured, independent of record_wall_clock
};

/// Trains until total_env_steps. With an out_dir, writes metrics.csv,
/// episodes.csv, config.json and agent checkpoints there.
RunResult run(const RunConfig& cfg);

json checkpoint_json(const AlgoState& state, const std::string& env);

struct EvalResult {
  std::vector<double> returns;
  double mean_return = 0.0;
};

/// Deterministic (sigma = 0) rollouts of a saved policy.
EvalResult evaluate(const json& checkpoint, int episodes, std::uint64_t seed = 0);
EvalResult evaluate(const std::filesystem::path& checkpoint, int episodes, std::uint64_t seed = 0);

struct SweepEntry {
  RunConfig config;
  std::string setting;  // label grouping runs that differ only by seed
};

struct SummaryRow {
  std::string env;
  std::string algo;
  std::string setting;
  int runs = 0;
  int failures = 0;
  double final_mean = 0.0;
  double final_var = 0.0;  // sample variance; 0 for a single run
  double first_goal_median = 0.0;  // infinity when the median run never reached it
  double seconds_total = 0.0;
};

struct SweepResult {
  std::vector<SummaryRow> summary;
  std::vector<std::optional<RunResult>> runs;  // empty where the run failed
  std::vector<std::string> errors;             // one per entry, empty on success
};

/// Expands {"base": {...}, "envs": [...], "algos": [...], "seeds": [...],
/// "sigma_inits": [...], "out_dir": "...", "jobs": n} into individual runs.
std::vector<SweepEntry> expand_sweep(const json& doc);

SweepResult sweep(const std::vector<SweepEntry>& entries, int jobs = 1, const std::string& out_dir = "");

std::vector<SummaryRow> summarize(const std::vector<SweepEntry>& entries,
                                  const std::vector<std::optional<RunResult>>& runs);

struct SigmaCurve {
  double sigma_init = 0.0;
  std::vector<MetricsRow> rows;
};

/// One run per sigma_init; curves hold the return and sigma traces.
std::vector<SigmaCurve> sigma_sweep(const RunConfig& base, const std::vector<double>& sigma_inits);

}  // namespace iemppo
