#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "iemppo/envs.hpp"
#include "iemppo/intrinsic.hpp"
#include "iemppo/nn.hpp"
#include "iemppo/policy.hpp"
#include "iemppo/ppo.hpp"

namespace iemppo {

enum class Algo { kPpo, kIcmPpo, kIemPpo };

std::string_view to_string(Algo algo);
Algo algo_from_string(std::string_view name);

struct SigmaConfig {
  double sigma_init = 0.6;
  double sigma_min = 0.1;
  double reward_low = -1400.0;
  double reward_high = -200.0;
};

struct TrainerConfig {
  Algo algo = Algo::kPpo;
  PpoConfig ppo;
  SigmaConfig sigma;
  int steps_per_iteration = 4000;
  std::vector<int> hidden_dims{64, 64};  // policy and value trunks

  double c1 = 0.05;    // uncertainty bonus scale
  double beta = 0.2;   // curiosity bonus scale
  int n_max = 16;
  double bonus_offset = 0.0;
  double intrinsic_lr = 1e-3;
  bool standardize_inputs = false;

  void validate() const;
};

struct MetricsRow {
  int iter = 0;
  long steps = 0;  // cumulative environment steps
  double ret_mean = 0.0;
  double ret_min = 0.0;
  double ret_max = 0.0;
  double bonus_mean = 0.0;
  double sigma = 0.0;  // schedule value after this iteration's updates
  int epochs_run = 0;
  double kl = 0.0;
  double loss_pi = 0.0;
  double loss_v = 0.0;
  double loss_intrinsic = 0.0;
  double seconds = 0.0;  // cumulative wall clock

  bool operator==(const MetricsRow&) const = default;
};

struct EpisodeRecord {
  long end_step = 0;  // cumulative environment steps when the episode ended
  double episode_return = 0.0;
  bool terminated = false;
};

/// Everything a run carries between iterations.
struct AlgoState {
  TrainerConfig cfg;
  GaussianPolicy policy;
  nn::Mlp value;
  nn::AdamState policy_adam;
  nn::AdamState value_adam;
  SigmaSchedule sigma;
  std::optional<CuriosityModule> icm;
  std::optional<UncertaintyModule> iem;

  Rng env_rng;
  Rng noise_rng;
  Rng shuffle_rng;
  Rng pair_rng;
  Rng intrinsic_shuffle_rng;

  int iteration = 0;
  long env_steps = 0;
  double wall_seconds = 0.0;
  std::vector<EpisodeRecord> episodes;
  std::optional<long> first_termination_step;
};

AlgoState make_algo_state(const TrainerConfig& cfg, const Env& env, std::uint64_t seed);

/// collect -> bonuses -> reward-to-go -> normalized advantages -> policy
/// update -> value update -> intrinsic-module update -> sigma schedule.
MetricsRow train_iteration(AlgoState& state, Env& env);

/// Mean extrinsic return over the last `window` completed episodes.
double final_window_mean(const std::vector<EpisodeRecord>& episodes, std::size_t window = 100);

}  // namespace iemppo
