#pragma once

#include <limits>
#include <vector>

#include "iemppo/nn.hpp"
#include "iemppo/policy.hpp"
#include "iemppo/rollout.hpp"

namespace iemppo {

struct PpoConfig {
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  int epochs = 80;
  int minibatch_size = 64;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double kl_limit = 0.015;

  /// Throws ConfigError. clip_epsilon may be +inf (unclipped surrogate).
  void validate() const;
};

/// min(r * A, clamp(r, 1 - eps, 1 + eps) * A), the per-sample term to maximize.
double clip_objective(double ratio, double advantage, double epsilon);

struct SurrogateEval {
  double objective = 0.0;  // mean clipped objective over the samples
  nn::ParamSet loss_grads;  // gradient of -objective w.r.t. the policy params
};

/// Clipped surrogate and its exact gradient over the batch columns in `index`.
/// sigma is fixed; only the mean network receives gradient.
SurrogateEval clipped_surrogate(const GaussianPolicy& policy, const Batch& batch, const std::vector<int>& index,
                                double sigma, double epsilon);

/// mean(log_prob_old - log_prob_new) over the whole batch.
double mean_kl(const GaussianPolicy& policy, const Batch& batch, double sigma);

struct PolicyUpdateStats {
  int epochs_run = 0;
  double final_kl = 0.0;
  double loss = 0.0;  // mean -objective over the last epoch's minibatches
};

/// Up to cfg.epochs passes of shuffled minibatch Adam ascent on the clipped
/// surrogate; stops after any epoch whose KL estimate exceeds cfg.kl_limit.
PolicyUpdateStats policy_update(GaussianPolicy& policy, const Batch& batch, double sigma, const PpoConfig& cfg,
                                nn::AdamState& adam, Rng& shuffle_rng);

/// cfg.epochs passes of minibatch Adam descent on mean (R - V(s))^2. Returns
/// the mean minibatch loss of the final epoch.
double value_update(nn::Mlp& value, const Mat& states, const Vec& returns, const PpoConfig& cfg, nn::AdamState& adam,
                    Rng& shuffle_rng);

/// Shuffled index chunks of at most `size` entries covering [0, n).
std::vector<std::vector<int>> minibatches(int n, int size, Rng& rng);

}  // namespace iemppo
