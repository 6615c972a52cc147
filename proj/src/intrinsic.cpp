#include "iemppo/intrinsic.hpp"

#include <algorithm>
#include <cmath>

#include "iemppo/ppo.hpp"

namespace iemppo {

// --- curiosity --------------------------------------------------------------

CuriosityModule CuriosityModule::create(int state_dim, int action_dim, double beta, double lr, Rng& init_rng) {
  if (beta < 0.0) throw ConfigError("curiosity: beta must be >= 0");
  nn::MlpSpec spec{state_dim + action_dim, {kHidden}, state_dim};
  CuriosityModule m;
  m.net = nn::Mlp(spec, init_rng);
  m.beta = beta;
  m.adam = nn::AdamState::for_spec(spec, lr);
  return m;
}

Vec CuriosityModule::predict(const Vec& state, const Vec& action) const {
  Vec input(state.size() + action.size());
  input << state, action;
  return net(input);
}

double icm_bonus(const CuriosityModule& module, const Vec& state, const Vec& action, const Vec& next_state) {
  if (state.size() + action.size() != module.net.spec.input_dim || next_state.size() != module.net.spec.output_dim) {
    throw ShapeError("icm_bonus: state/action sizes do not match the forward model");
  }
  if (module.beta == 0.0) return 0.0;
  return module.beta * (module.predict(state, action) - next_state).squaredNorm();
}

double icm_update(CuriosityModule& module, const Mat& inputs, const Mat& targets, Rng& shuffle_rng) {
  if (inputs.cols() == 0) throw ConfigError("icm_update: no transitions");
  if (inputs.cols() != targets.cols() || targets.rows() != module.net.spec.output_dim) {
    throw ShapeError("icm_update: inputs and targets disagree");
  }
  const auto chunks = minibatches(static_cast<int>(inputs.cols()), module.minibatch_size, shuffle_rng);
  double loss_sum = 0.0;
  for (const auto& idx : chunks) {
    const auto n = static_cast<double>(idx.size());
    nn::ForwardCache cache;
    const Mat pred = module.net.batch(inputs(Eigen::all, idx), &cache);
    const Mat diff = pred - targets(Eigen::all, idx);
    const double loss = diff.colwise().squaredNorm().sum() / n;
    if (!std::isfinite(loss)) throw NumericError("icm_update: non-finite loss");
    loss_sum += loss;
    auto grads = nn::backward_batch(module.net.spec, module.net.params, cache, (2.0 / n) * diff);
    nn::adam_step(module.net.params, grads.params, module.adam);
  }
  return loss_sum / static_cast<double>(chunks.size());
}

double icm_update(CuriosityModule& module, const std::vector<Trajectory>& trajectories, Rng& shuffle_rng) {
  Eigen::Index n = 0;
  for (const auto& t : trajectories) n += static_cast<Eigen::Index>(t.size());
  if (n == 0) throw ConfigError("icm_update: no transitions");
  Mat inputs(module.net.spec.input_dim, n);
  Mat targets(module.net.spec.output_dim, n);
  Eigen::Index k = 0;
  for (const auto& traj : trajectories) {
    for (const auto& t : traj.transitions) {
      inputs.col(k) << t.state, t.action;
      targets.col(k) = t.next_state;
      ++k;
    }
  }
  return icm_update(module, inputs, targets, shuffle_rng);
}

// --- uncertainty ------------------------------------------------------------

void InputStandardizer::observe(const Mat& samples) {
  if (!enabled || samples.cols() == 0) return;
  if (mean.size() == 0) {
    mean = Vec::Zero(samples.rows());
    m2 = Vec::Zero(samples.rows());
  }
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    count += 1.0;
    const Vec delta = samples.col(c) - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(samples.col(c) - mean);
  }
}

Mat InputStandardizer::apply(const Mat& samples) const {
  if (!enabled || count < 2.0) return samples;
  const Vec stddev = (m2 / count).cwiseSqrt().cwiseMax(1e-6);
  return (samples.colwise() - mean).array().colwise() / stddev.array();
}

UncertaintyModule UncertaintyModule::create(int state_dim, double c1, int n_max, double bonus_offset, double lr,
                                            bool standardize_inputs, Rng& init_rng) {
  if (c1 < 0.0) throw ConfigError("uncertainty: c1 must be >= 0");
  if (n_max < 1) throw ConfigError("uncertainty: n_max must be >= 1");
  nn::MlpSpec spec{2 * state_dim, {64, 64}, 1};
  UncertaintyModule m;
  m.net = nn::Mlp(spec, init_rng);
  m.c1 = c1;
  m.n_max = n_max;
  m.bonus_offset = bonus_offset;
  m.adam = nn::AdamState::for_spec(spec, lr);
  m.standardizer.enabled = standardize_inputs;
  return m;
}

Vec UncertaintyModule::predict_batch(const Mat& from, const Mat& to) const {
  if (from.rows() + to.rows() != net.spec.input_dim || from.cols() != to.cols()) {
    throw ShapeError("uncertainty: state pair sizes do not match the estimator");
  }
  Mat input(from.rows() + to.rows(), from.cols());
  input << from, to;
  return net.batch(standardizer.apply(input)).row(0).transpose();
}

double UncertaintyModule::predict(const Vec& from, const Vec& to) const { return predict_batch(from, to)[0]; }

double iem_bonus(const UncertaintyModule& module, const Vec& state, const Vec& next_state) {
  const double raw = module.predict(state, next_state);
  if (module.c1 == 0.0) return 0.0;
  const double steps = std::clamp(raw, 0.0, static_cast<double>(module.n_max));
  return module.c1 * std::max(0.0, steps - module.bonus_offset);
}

std::vector<StepPair> iem_pairs(const std::vector<Trajectory>& trajectories, int n_max, Rng& rng) {
  if (n_max < 1) throw ConfigError("iem_pairs: n_max must be >= 1");
  std::vector<StepPair> out;
  for (const auto& traj : trajectories) {
    const int T = static_cast<int>(traj.size());
    auto state_at = [&](int i) -> const Vec& {
      return i < T ? traj.transitions[i].state : traj.transitions.back().next_state;
    };
    for (int t = 0; t < T; ++t) {
      std::uniform_int_distribution<int> draw(1, std::min(n_max, T - t));
      const int n = draw(rng);
      out.push_back({state_at(t), state_at(t + n), n});
    }
  }
  return out;
}

namespace {

void pack_pairs(const std::vector<StepPair>& pairs, Mat& from, Mat& to, Vec& labels) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  const auto dim = pairs.front().from.size();
  from.resize(dim, n);
  to.resize(dim, n);
  labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    from.col(i) = pairs[i].from;
    to.col(i) = pairs[i].to;
    labels[i] = pairs[i].steps;
  }
}

}  // namespace

double iem_update(UncertaintyModule& module, const std::vector<StepPair>& pairs, Rng& shuffle_rng) {
  if (pairs.empty()) throw ConfigError("iem_update: no pairs");
  Mat from, to;
  Vec labels;
  pack_pairs(pairs, from, to, labels);
  if (2 * from.rows() != module.net.spec.input_dim) throw ShapeError("iem_update: state size mismatch");
  Mat inputs(2 * from.rows(), from.cols());
  inputs << from, to;
  module.standardizer.observe(inputs);
  inputs = module.standardizer.apply(inputs);

  const auto chunks = minibatches(static_cast<int>(labels.size()), module.minibatch_size, shuffle_rng);
  double loss_sum = 0.0;
  for (const auto& idx : chunks) {
    const auto n = static_cast<double>(idx.size());
    nn::ForwardCache cache;
    const Mat pred = module.net.batch(inputs(Eigen::all, idx), &cache);
    const Eigen::RowVectorXd diff = pred.row(0) - labels(idx).transpose();
    const double loss = diff.squaredNorm() / n;
    if (!std::isfinite(loss)) throw NumericError("iem_update: non-finite loss");
    loss_sum += loss;
    const Mat out_grad = (2.0 / n) * diff;
    auto grads = nn::backward_batch(module.net.spec, module.net.params, cache, out_grad);
    nn::adam_step(module.net.params, grads.params, module.adam);
  }
  return loss_sum / static_cast<double>(chunks.size());
}

double iem_loss(const UncertaintyModule& module, const std::vector<StepPair>& pairs) {
  if (pairs.empty()) throw ConfigError("iem_loss: no pairs");
  Mat from, to;
  Vec labels;
  pack_pairs(pairs, from, to, labels);
  return (module.predict_batch(from, to) - labels).squaredNorm() / static_cast<double>(labels.size());
}

// --- count table ------------------------------------------------------------

CountTable::CountTable(Vec low, Vec high, int bins_per_dim) : low_(std::move(low)), high_(std::move(high)), bins_(bins_per_dim) {
  if (low_.size() != high_.size() || low_.size() == 0) throw ShapeError("CountTable: bounds must be non-empty and match");
  if (!(low_.array() < high_.array()).all()) throw ConfigError("CountTable: low must be below high");
  if (bins_ < 1) throw ConfigError("CountTable: need at least one bin per dimension");
}

std::uint64_t CountTable::cell(const Vec& state) const {
  if (state.size() != low_.size()) throw ShapeError("CountTable: state size mismatch");
  std::uint64_t id = 0;
  for (Eigen::Index d = 0; d < state.size(); ++d) {
    const double frac = (state[d] - low_[d]) / (high_[d] - low_[d]);
    const int bin = std::clamp(static_cast<int>(std::floor(frac * bins_)), 0, bins_ - 1);
    id = id * static_cast<std::uint64_t>(bins_) + static_cast<std::uint64_t>(bin);
  }
  return id;
}

void CountTable::record(const Vec& state) {
  ++counts_[cell(state)];
  ++total_;
}

long CountTable::count_cell(std::uint64_t c) const {
  const auto it = counts_.find(c);
  return it == counts_.end() ? 0 : it->second;
}

long CountTable::count(const Vec& state) const { return count_cell(cell(state)); }

double count_bonus(long visits) { return visits <= 0 ? 1.0 : std::sqrt(1.0 / static_cast<double>(visits)); }

double count_bonus(const CountTable& table, const Vec& state) { return count_bonus(table.count(state)); }

}  // namespace iemppo
