#include "iemppo/policy.hpp"

#include <algorithm>
#include <cmath>

namespace iemppo {

GaussianPolicy::GaussianPolicy(nn::Mlp network, Vec low, Vec high)
    : net(std::move(network)), action_low(std::move(low)), action_high(std::move(high)) {
  if (action_low.size() != action_dim() || action_high.size() != action_dim()) {
    throw ShapeError("policy: action bounds must have one entry per action dimension");
  }
  if (!(action_low.array() < action_high.array()).all()) {
    throw ConfigError("policy: action_low must be strictly below action_high");
  }
}

Vec GaussianPolicy::mean(const Vec& state) const {
  if (!state.allFinite()) throw NumericError("policy: non-finite state");
  return net(state);
}

ActResult act(const GaussianPolicy& policy, const Vec& state, double sigma, Rng& rng) {
  if (sigma < 0.0 || !std::isfinite(sigma)) throw ConfigError("act: sigma must be finite and >= 0");
  ActResult out;
  out.mean = policy.mean(state);
  if (sigma == 0.0) {
    out.sample = out.mean;
    out.action = out.mean.cwiseMax(policy.action_low).cwiseMin(policy.action_high);
    out.log_prob = 0.0;
    return out;
  }
  std::normal_distribution<double> noise(0.0, sigma);
  out.sample.resize(out.mean.size());
  for (Eigen::Index i = 0; i < out.sample.size(); ++i) out.sample[i] = out.mean[i] + noise(rng);
  out.log_prob = log_prob(out.mean, sigma, out.sample);
  out.action = out.sample.cwiseMax(policy.action_low).cwiseMin(policy.action_high);
  return out;
}

double log_prob(const Vec& mean, const Vec& sigma, const Vec& action) {
  if (mean.size() != sigma.size() || mean.size() != action.size()) {
    throw ShapeError("log_prob: mean, sigma and action lengths differ");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw std::domain_error("log_prob: sigma must be > 0");
    const double z = (action[i] - mean[i]) / sigma[i];
    total += -0.5 * (z * z + 2.0 * std::log(sigma[i]) + kLogTwoPi);
  }
  return total;
}

double log_prob(const Vec& mean, double sigma, const Vec& action) {
  return log_prob(mean, Vec::Constant(mean.size(), sigma), action);
}

Vec log_prob_batch(const Mat& means, double sigma, const Mat& actions) {
  if (means.rows() != actions.rows() || means.cols() != actions.cols()) {
    throw ShapeError("log_prob_batch: mean and action shapes differ");
  }
  if (!(sigma > 0.0)) throw std::domain_error("log_prob_batch: sigma must be > 0");
  const double per_dim = 2.0 * std::log(sigma) + kLogTwoPi;
  const auto z = ((actions - means) / sigma).array();
  return (-0.5 * ((z.square()).colwise().sum() + per_dim * static_cast<double>(means.rows()))).transpose();
}

SigmaSchedule::SigmaSchedule(double sigma_init, double sigma_min, double reward_low, double reward_high)
    : sigma_init_(sigma_init),
      sigma_min_(sigma_min),
      reward_low_(reward_low),
      reward_high_(reward_high),
      running_reward_(reward_low),
      current_sigma_(sigma_init) {
  if (!(sigma_min > 0.0) || !(sigma_init >= sigma_min)) {
    throw ConfigError("sigma schedule: need 0 < sigma_min <= sigma_init");
  }
  if (!(reward_high > reward_low)) throw ConfigError("sigma schedule: reward_high must exceed reward_low");
}

void SigmaSchedule::update(double latest_episode_return) {
  running_reward_ = kDecay * running_reward_ + (1.0 - kDecay) * latest_episode_return;
  const double progress = std::clamp((running_reward_ - reward_low_) / (reward_high_ - reward_low_), 0.0, 1.0);
  const double candidate = std::lerp(sigma_init_, sigma_min_, progress);  // exact at both ends
  current_sigma_ = std::min(current_sigma_, candidate);
}

void SigmaSchedule::restore(double running_reward, double current_sigma) {
  if (!(current_sigma >= sigma_min_ && current_sigma <= sigma_init_)) {
    throw ConfigError("sigma schedule: restored sigma outside [sigma_min, sigma_init]");
  }
  running_reward_ = running_reward;
  current_sigma_ = current_sigma;
}

}  // namespace iemppo
