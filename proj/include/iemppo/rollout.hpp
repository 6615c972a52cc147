#pragma once

#include <functional>
#include <vector>

#include "iemppo/envs.hpp"
#include "iemppo/policy.hpp"

namespace iemppo {

struct Transition {
  Vec state;
  Vec action;          // executed (clamped)
  Vec sampled_action;  // policy sample that log_prob_old refers to
  double extrinsic_reward = 0.0;
  double intrinsic_reward = 0.0;
  double log_prob_old = 0.0;
  bool terminated = false;
  bool truncated = false;
  Vec next_state;

  double total_reward() const { return extrinsic_reward + intrinsic_reward; }
};

struct Trajectory {
  std::vector<Transition> transitions;
  double episode_return = 0.0;  // extrinsic only

  std::size_t size() const { return transitions.size(); }
  bool terminated() const { return !transitions.empty() && transitions.back().terminated; }
  bool truncated() const { return !transitions.empty() && transitions.back().truncated; }
};

/// Flattened training arrays; column i of states/actions pairs with entry i
/// of the vectors. `actions` holds the unclamped policy samples.
struct Batch {
  Mat states;
  Mat actions;
  Vec log_probs_old;
  Vec returns;
  Vec advantages;

  Eigen::Index size() const { return log_probs_old.size(); }
};

/// Called once per transition during collection; returns the intrinsic reward.
using BonusHook = std::function<double(const Transition&)>;
using ValueFn = std::function<double(const Vec&)>;

/// Runs whole episodes until at least `min_steps` transitions were recorded.
/// Episode starts draw from `env_rng`, action noise from `noise_rng`.
std::vector<Trajectory> collect(const GaussianPolicy& policy, double sigma, Env& env, int min_steps,
                                const BonusHook& bonus, Rng& env_rng, Rng& noise_rng);

/// Discounted reward-to-go over extrinsic + intrinsic reward. The tail after
/// the final transition is 0 if it terminated and value_fn(next_state) if it
/// was truncated.
Vec reward_to_go(const Trajectory& traj, double gamma, const ValueFn& value_fn);

/// returns - values, optionally shifted to zero mean and scaled by the
/// population std. Batches whose std is below kStdFloor normalize to zeros.
inline constexpr double kStdFloor = 1e-8;
Vec advantages(const Vec& returns, const Vec& values, bool normalize);

/// Concatenates trajectories into training arrays; returns/advantages are
/// left empty.
Batch flatten(const std::vector<Trajectory>& trajectories);

}  // namespace iemppo
