#pragma once

// Exploration bonuses added to the environment reward during training.
//
//  * Curiosity: beta * |f(s, a) - s'|^2 for a learned forward model f.
//  * Uncertainty: c1 * N(s, s') where N is a regressor trained to predict how
//    many environment steps separate two states of the same episode. A
//    one-step transition truly needs 1 step, so a large prediction marks a
//    transition the regressor has rarely seen.
//  * CountTable: tabular visit counts with bonus sqrt(1 / N(s)), kept as a
//    reference signal for the learned estimator.

#include <cstdint>
#include <map>
#include <vector>

#include "iemppo/nn.hpp"
#include "iemppo/rollout.hpp"

namespace iemppo {

struct CuriosityModule {
  static constexpr int kHidden = 32;

  nn::Mlp net;  // (s, a) -> s'
  double beta = 0.2;
  nn::AdamState adam;
  int minibatch_size = 64;

  static CuriosityModule create(int state_dim, int action_dim, double beta, double lr, Rng& init_rng);
  Vec predict(const Vec& state, const Vec& action) const;
};

double icm_bonus(const CuriosityModule& module, const Vec& state, const Vec& action, const Vec& next_state);

/// One epoch of minibatch Adam on mean |f(s, a) - s'|^2 over the executed
/// transitions. Returns the mean minibatch loss.
double icm_update(CuriosityModule& module, const std::vector<Trajectory>& trajectories, Rng& shuffle_rng);
double icm_update(CuriosityModule& module, const Mat& inputs, const Mat& targets, Rng& shuffle_rng);

/// Running per-feature mean/variance (Welford) used to standardize inputs.
struct InputStandardizer {
  bool enabled = false;
  double count = 0.0;
  Vec mean;
  Vec m2;

  void observe(const Mat& samples);
  Mat apply(const Mat& samples) const;
};

struct StepPair {
  Vec from;
  Vec to;
  int steps = 1;
};

struct UncertaintyModule {
  nn::Mlp net;  // (s_t, s_{t+n}) -> n
  double c1 = 0.05;
  int n_max = 16;
  double bonus_offset = 0.0;
  nn::AdamState adam;
  int minibatch_size = 64;
  InputStandardizer standardizer;

  static UncertaintyModule create(int state_dim, double c1, int n_max, double bonus_offset, double lr,
                                  bool standardize_inputs, Rng& init_rng);

  /// Raw regressor output for the pair.
  double predict(const Vec& from, const Vec& to) const;
  Vec predict_batch(const Mat& from, const Mat& to) const;
};

/// c1 * max(0, clamp(N(s, s'), 0, n_max) - bonus_offset).
double iem_bonus(const UncertaintyModule& module, const Vec& state, const Vec& next_state);

/// One (s_t, s_{t+n}, n) pair per time index of every trajectory, with n
/// uniform on {1, ..., min(n_max, T - t)}. A trajectory of T transitions
/// contributes its T + 1 visited states; pairs never cross episodes.
std::vector<StepPair> iem_pairs(const std::vector<Trajectory>& trajectories, int n_max, Rng& rng);

/// One epoch of minibatch Adam on mean (n - N(s_t, s_{t+n}))^2. Returns the
/// mean minibatch loss.
double iem_update(UncertaintyModule& module, const std::vector<StepPair>& pairs, Rng& shuffle_rng);

/// Mean squared step-count error on `pairs` without training.
double iem_loss(const UncertaintyModule& module, const std::vector<StepPair>& pairs);

/// Visit counts over a uniform grid on the box [low, high]. States outside
/// the box fall into the nearest edge cell.
class CountTable {
 public:
  CountTable(Vec low, Vec high, int bins_per_dim = 10);

  std::uint64_t cell(const Vec& state) const;
  void record(const Vec& state);
  long count(const Vec& state) const;
  long count_cell(std::uint64_t cell) const;
  long total() const { return total_; }
  const std::map<std::uint64_t, long>& cells() const { return counts_; }
  int bins_per_dim() const { return bins_; }

 private:
  Vec low_, high_;
  int bins_;
  std::map<std::uint64_t, long> counts_;
  long total_ = 0;
};

/// sqrt(1 / N); an unvisited state (N = 0) is capped at 1.
double count_bonus(long visits);
double count_bonus(const CountTable& table, const Vec& state);

}  // namespace iemppo
