#include "iemppo/rollout.hpp"

#include <cmath>

namespace iemppo {

std::vector<Trajectory> collect(const GaussianPolicy& policy, double sigma, Env& env, int min_steps,
                                const BonusHook& bonus, Rng& env_rng, Rng& noise_rng) {
  if (min_steps < 1) throw ConfigError("collect: min_steps must be >= 1");
  if (env.state_dim() != policy.state_dim() || env.action_dim() != policy.action_dim()) {
    throw ShapeError("collect: policy and environment dimensions differ");
  }
  std::vector<Trajectory> out;
  int steps = 0;
  while (steps < min_steps) {
    Trajectory traj;
    traj.transitions.reserve(env.max_episode_steps());
    Vec state = env.reset(env_rng);
    while (true) {
      ActResult a = act(policy, state, sigma, noise_rng);
      StepResult r = env.step(a.action);
      Transition t;
      t.state = std::move(state);
      t.action = std::move(a.action);
      t.sampled_action = std::move(a.sample);
      t.extrinsic_reward = r.reward;
      t.log_prob_old = a.log_prob;
      t.terminated = r.terminated;
      t.truncated = r.truncated;
      t.next_state = r.next_state;
      if (bonus) t.intrinsic_reward = bonus(t);
      traj.episode_return += t.extrinsic_reward;
      traj.transitions.push_back(std::move(t));
      ++steps;
      if (r.terminated || r.truncated) break;
      state = std::move(r.next_state);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

Vec reward_to_go(const Trajectory& traj, double gamma, const ValueFn& value_fn) {
  const auto n = static_cast<Eigen::Index>(traj.size());
  Vec out(n);
  if (n == 0) return out;
  double tail = 0.0;
  const auto& last = traj.transitions.back();
  if (!last.terminated && last.truncated) tail = value_fn(last.next_state);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    tail = traj.transitions[t].total_reward() + gamma * tail;
    out[t] = tail;
  }
  return out;
}

Vec advantages(const Vec& returns, const Vec& values, bool normalize) {
  if (returns.size() == 0) throw ShapeError("advantages: empty input");
  if (returns.size() != values.size()) throw ShapeError("advantages: returns and values lengths differ");
  Vec adv = returns - values;
  if (!normalize) return adv;
  if (adv.size() < 2) throw ShapeError("advantages: normalization needs at least two samples");
  const double mean = adv.mean();
  const double stddev = std::sqrt((adv.array() - mean).square().mean());
  if (!(stddev > kStdFloor)) return Vec::Zero(adv.size());
  return (adv.array() - mean) / stddev;
}

Batch flatten(const std::vector<Trajectory>& trajectories) {
  Eigen::Index n = 0;
  for (const auto& t : trajectories) n += static_cast<Eigen::Index>(t.size());
  Batch b;
  if (n == 0) return b;
  const auto& first = trajectories.front().transitions.front();
  b.states.resize(first.state.size(), n);
  b.actions.resize(first.sampled_action.size(), n);
  b.log_probs_old.resize(n);
  Eigen::Index k = 0;
  for (const auto& traj : trajectories) {
    for (const auto& t : traj.transitions) {
      b.states.col(k) = t.state;
      b.actions.col(k) = t.sampled_action;
      b.log_probs_old[k] = t.log_prob_old;
      ++k;
    }
  }
  return b;
}

}  // namespace iemppo
