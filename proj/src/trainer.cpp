#include "iemppo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace iemppo {

std::string_view to_string(Algo algo) {
  switch (algo) {
    case Algo::kPpo:
      return "ppo";
    case Algo::kIcmPpo:
      return "icm-ppo";
    case Algo::kIemPpo:
      return "iem-ppo";
  }
  return "unknown";
}

Algo algo_from_string(std::string_view name) {
  if (name == "ppo") return Algo::kPpo;
  if (name == "icm-ppo") return Algo::kIcmPpo;
  if (name == "iem-ppo") return Algo::kIemPpo;
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected ppo, icm-ppo or iem-ppo)");
}

void TrainerConfig::validate() const {
  ppo.validate();
  if (steps_per_iteration < 1) throw ConfigError("steps_per_iteration must be >= 1");
  if (!(sigma.sigma_min > 0.0) || !(sigma.sigma_init >= sigma.sigma_min)) {
    throw ConfigError("need 0 < sigma_min <= sigma_init");
  }
  if (!(sigma.reward_high > sigma.reward_low)) throw ConfigError("reward_high must exceed reward_low");
  if (c1 < 0.0) throw ConfigError("c1 must be >= 0");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  if (!(intrinsic_lr > 0.0)) throw ConfigError("intrinsic_lr must be positive");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
  }
}

AlgoState make_algo_state(const TrainerConfig& cfg, const Env& env, std::uint64_t seed) {
  cfg.validate();
  AlgoState s;
  s.cfg = cfg;

  Rng policy_init = make_stream(seed, Stream::kPolicyInit);
  Rng value_init = make_stream(seed, Stream::kValueInit);
  Rng intrinsic_init = make_stream(seed, Stream::kIntrinsicInit);

  nn::MlpSpec policy_spec{env.state_dim(), cfg.hidden_dims, env.action_dim()};
  nn::MlpSpec value_spec{env.state_dim(), cfg.hidden_dims, 1};
  s.policy = GaussianPolicy(nn::Mlp(policy_spec, policy_init), env.action_low(), env.action_high());
  s.value = nn::Mlp(value_spec, value_init);
  s.policy_adam = nn::AdamState::for_spec(policy_spec, cfg.ppo.policy_lr);
  s.value_adam = nn::AdamState::for_spec(value_spec, cfg.ppo.value_lr);
  s.sigma = SigmaSchedule(cfg.sigma.sigma_init, cfg.sigma.sigma_min, cfg.sigma.reward_low, cfg.sigma.reward_high);

  if (cfg.algo == Algo::kIcmPpo) {
    s.icm = CuriosityModule::create(env.state_dim(), env.action_dim(), cfg.beta, cfg.intrinsic_lr, intrinsic_init);
  } else if (cfg.algo == Algo::kIemPpo) {
    s.iem = UncertaintyModule::create(env.state_dim(), cfg.c1, cfg.n_max, cfg.bonus_offset, cfg.intrinsic_lr,
                                      cfg.standardize_inputs, intrinsic_init);
  }

  s.env_rng = make_stream(seed, Stream::kEnv);
  s.noise_rng = make_stream(seed, Stream::kNoise);
  s.shuffle_rng = make_stream(seed, Stream::kShuffle);
  s.pair_rng = make_stream(seed, Stream::kPairs);
  s.intrinsic_shuffle_rng = make_stream(seed, Stream::kIntrinsicShuffle);
  return s;
}

namespace {

BonusHook make_hook(const AlgoState& s) {
  if (s.icm) {
    const CuriosityModule* m = &*s.icm;
    return [m](const Transition& t) { return icm_bonus(*m, t.state, t.action, t.next_state); };
  }
  if (s.iem) {
    const UncertaintyModule* m = &*s.iem;
    return [m](const Transition& t) { return iem_bonus(*m, t.state, t.next_state); };
  }
  return {};
}

MetricsRow run_iteration(AlgoState& s, Env& env) {
  const auto& cfg = s.cfg;
  const double sigma = s.sigma.sigma();
  MetricsRow row;
  row.iter = s.iteration;

  auto trajectories = collect(s.policy, sigma, env, cfg.steps_per_iteration, make_hook(s), s.env_rng, s.noise_rng);

  // Targets from the pre-update value network.
  const nn::Mlp& value = s.value;
  const ValueFn value_fn = [&value](const Vec& state) { return value(state)[0]; };
  Batch batch = flatten(trajectories);
  batch.returns.resize(batch.size());
  Eigen::Index offset = 0;
  double bonus_sum = 0.0;
  for (const auto& traj : trajectories) {
    const Vec rtg = reward_to_go(traj, cfg.ppo.gamma, value_fn);
    batch.returns.segment(offset, rtg.size()) = rtg;
    offset += rtg.size();
    for (const auto& t : traj.transitions) bonus_sum += t.intrinsic_reward;
  }
  const Vec baseline = value.batch(batch.states).row(0).transpose();
  batch.advantages = advantages(batch.returns, baseline, /*normalize=*/true);

  const auto pi_stats = policy_update(s.policy, batch, sigma, cfg.ppo, s.policy_adam, s.shuffle_rng);
  row.loss_v = value_update(s.value, batch.states, batch.returns, cfg.ppo, s.value_adam, s.shuffle_rng);
  row.epochs_run = pi_stats.epochs_run;
  row.kl = pi_stats.final_kl;
  row.loss_pi = pi_stats.loss;

  if (s.icm) {
    row.loss_intrinsic = icm_update(*s.icm, trajectories, s.intrinsic_shuffle_rng);
  } else if (s.iem) {
    const auto pairs = iem_pairs(trajectories, s.iem->n_max, s.pair_rng);
    row.loss_intrinsic = iem_update(*s.iem, pairs, s.intrinsic_shuffle_rng);
  }

  double ret_sum = 0.0;
  row.ret_min = std::numeric_limits<double>::infinity();
  row.ret_max = -std::numeric_limits<double>::infinity();
  for (const auto& traj : trajectories) {
    s.env_steps += static_cast<long>(traj.size());
    s.episodes.push_back({s.env_steps, traj.episode_return, traj.terminated()});
    if (traj.terminated() && !s.first_termination_step) s.first_termination_step = s.env_steps;
    s.sigma.update(traj.episode_return);
    ret_sum += traj.episode_return;
    row.ret_min = std::min(row.ret_min, traj.episode_return);
    row.ret_max = std::max(row.ret_max, traj.episode_return);
  }
  row.ret_mean = ret_sum / static_cast<double>(trajectories.size());
  row.bonus_mean = bonus_sum / static_cast<double>(batch.size());
  row.sigma = s.sigma.sigma();
  row.steps = s.env_steps;
  return row;
}

}  // namespace

MetricsRow train_iteration(AlgoState& state, Env& env) {
  const auto start = std::chrono::steady_clock::now();
  MetricsRow row;
  try {
    row = run_iteration(state, env);
  } catch (const NumericError& e) {
    throw NumericError("iteration " + std::to_string(state.iteration) + ": " + e.what());
  }
  state.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  row.seconds = state.wall_seconds;
  ++state.iteration;
  return row;
}

double final_window_mean(const std::vector<EpisodeRecord>& episodes, std::size_t window) {
  if (episodes.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = std::min(window, episodes.size());
  double sum = 0.0;
  for (std::size_t i = episodes.size() - n; i < episodes.size(); ++i) sum += episodes[i].episode_return;
  return sum / static_cast<double>(n);
}

}  // namespace iemppo
