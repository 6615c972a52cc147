#pragma once

#include "iemppo/nn.hpp"

namespace iemppo {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Diagonal Gaussian around a network mean, clamped to the action box.
struct GaussianPolicy {
  nn::Mlp net;
  Vec action_low;
  Vec action_high;

  GaussianPolicy() = default;
  GaussianPolicy(nn::Mlp network, Vec low, Vec high);

  int state_dim() const { return net.spec.input_dim; }
  int action_dim() const { return net.spec.output_dim; }
  Vec mean(const Vec& state) const;
};

struct ActResult {
  Vec action;       // clamped to the action box; what the environment sees
  Vec sample;       // unclamped mean + noise
  double log_prob;  // of `sample`; 0 when sigma == 0
  Vec mean;
};

/// Samples mean + N(0, sigma^2) per dimension. sigma == 0 returns the mean.
ActResult act(const GaussianPolicy& policy, const Vec& state, double sigma, Rng& rng);

/// Sum over dimensions of -1/2 [((a-mu)/sigma)^2 + 2 ln sigma + ln 2pi].
double log_prob(const Vec& mean, const Vec& sigma, const Vec& action);
double log_prob(const Vec& mean, double sigma, const Vec& action);

/// Per-column log-likelihoods for a batch (columns are samples).
Vec log_prob_batch(const Mat& means, double sigma, const Mat& actions);

/// Reward-indexed exploration scale. An exponential moving average of episode
/// return is mapped linearly from [reward_low, reward_high] onto
/// [sigma_init, sigma_min]; the emitted sigma never increases.
class SigmaSchedule {
 public:
  static constexpr double kDecay = 0.99;

  SigmaSchedule() = default;
  /// running_reward starts at reward_low.
  SigmaSchedule(double sigma_init, double sigma_min, double reward_low, double reward_high);

  void update(double latest_episode_return);

  double sigma() const { return current_sigma_; }
  double running_reward() const { return running_reward_; }
  double sigma_init() const { return sigma_init_; }
  double sigma_min() const { return sigma_min_; }
  double reward_low() const { return reward_low_; }
  double reward_high() const { return reward_high_; }

  /// Restores saved progress; checks the schedule invariants.
  void restore(double running_reward, double current_sigma);

 private:
  double sigma_init_ = 0.6;
  double sigma_min_ = 0.1;
  double reward_low_ = 0.0;
  double reward_high_ = 1.0;
  double running_reward_ = 0.0;
  double current_sigma_ = 0.6;
};

}  // namespace iemppo
