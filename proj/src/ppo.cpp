#include "iemppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace iemppo {

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0) || (std::isfinite(clip_epsilon) && !(clip_epsilon < 1.0))) {
    throw ConfigError("clip_epsilon must lie in (0, 1) (or be infinite to disable clipping)");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
  if (!(policy_lr > 0.0) || !(value_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(kl_limit > 0.0)) throw ConfigError("kl_limit must be positive");
}

double clip_objective(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

std::vector<std::vector<int>> minibatches(int n, int size, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < n; start += size) {
    out.emplace_back(order.begin() + start, order.begin() + std::min(n, start + size));
  }
  return out;
}

SurrogateEval clipped_surrogate(const GaussianPolicy& policy, const Batch& batch, const std::vector<int>& index,
                                double sigma, double epsilon) {
  const Mat states = batch.states(Eigen::all, index);
  const Mat actions = batch.actions(Eigen::all, index);
  const auto n = static_cast<Eigen::Index>(index.size());

  nn::ForwardCache cache;
  const Mat means = policy.net.batch(states, &cache);
  const Vec lp_new = log_prob_batch(means, sigma, actions);

  Mat out_grad(means.rows(), n);
  double objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = index[static_cast<std::size_t>(i)];
    const double adv = batch.advantages[k];
    const double ratio = std::exp(lp_new[i] - batch.log_probs_old[k]);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped * adv;
    objective += std::min(unclipped_term, clipped_term);
    // The min selects the unclipped branch (or ties with it) -> d/dr = A.
    const double d_ratio = unclipped_term <= clipped_term ? adv : 0.0;
    // d ratio / d mean = ratio * (a - mean) / sigma^2; loss is the negated mean.
    out_grad.col(i) = -(d_ratio * ratio / (sigma * sigma * static_cast<double>(n))) * (actions.col(i) - means.col(i));
  }
  objective /= static_cast<double>(n);

  auto grads = nn::backward_batch(policy.net.spec, policy.net.params, cache, out_grad);
  return {objective, std::move(grads.params)};
}

double mean_kl(const GaussianPolicy& policy, const Batch& batch, double sigma) {
  const Mat means = policy.net.batch(batch.states);
  const Vec lp_new = log_prob_batch(means, sigma, batch.actions);
  return (batch.log_probs_old - lp_new).mean();
}

PolicyUpdateStats policy_update(GaussianPolicy& policy, const Batch& batch, double sigma, const PpoConfig& cfg,
                                nn::AdamState& adam, Rng& shuffle_rng) {
  if (batch.size() == 0) throw ConfigError("policy_update: empty batch");
  if (!(sigma > 0.0)) throw ConfigError("policy_update: sigma must be > 0");
  PolicyUpdateStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto chunks = minibatches(static_cast<int>(batch.size()), cfg.minibatch_size, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t m = 0; m < chunks.size(); ++m) {
      auto eval = clipped_surrogate(policy, batch, chunks[m], sigma, cfg.clip_epsilon);
      if (!std::isfinite(eval.objective)) {
        std::ostringstream msg;
        msg << "policy_update: non-finite surrogate at epoch " << epoch << ", minibatch " << m;
        throw NumericError(msg.str());
      }
      loss_sum -= eval.objective;
      nn::adam_step(policy.net.params, eval.loss_grads, adam);
    }
    stats.loss = loss_sum / static_cast<double>(chunks.size());
    stats.epochs_run = epoch + 1;
    stats.final_kl = mean_kl(policy, batch, sigma);
    if (!std::isfinite(stats.final_kl)) {
      std::ostringstream msg;
      msg << "policy_update: non-finite KL estimate after epoch " << epoch;
      throw NumericError(msg.str());
    }
    if (stats.final_kl > cfg.kl_limit) break;
  }
  return stats;
}

double value_update(nn::Mlp& value, const Mat& states, const Vec& returns, const PpoConfig& cfg, nn::AdamState& adam,
                    Rng& shuffle_rng) {
  if (states.cols() != returns.size()) throw ShapeError("value_update: states and returns lengths differ");
  if (returns.size() == 0) throw ConfigError("value_update: empty batch");
  double last_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto chunks = minibatches(static_cast<int>(returns.size()), cfg.minibatch_size, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t m = 0; m < chunks.size(); ++m) {
      const auto& idx = chunks[m];
      const auto n = static_cast<double>(idx.size());
      nn::ForwardCache cache;
      const Mat pred = value.batch(states(Eigen::all, idx), &cache);
      const Eigen::RowVectorXd diff = pred.row(0) - returns(idx).transpose();
      const double loss = diff.squaredNorm() / n;
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "value_update: non-finite loss at epoch " << epoch << ", minibatch " << m;
        throw NumericError(msg.str());
      }
      loss_sum += loss;
      const Mat out_grad = (2.0 / n) * diff;
      auto grads = nn::backward_batch(value.spec, value.params, cache, out_grad);
      nn::adam_step(value.params, grads.params, adam);
    }
    last_loss = loss_sum / static_cast<double>(chunks.size());
  }
  return last_loss;
}

}  // namespace iemppo
