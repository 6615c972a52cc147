#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "iemppo/core.hpp"

namespace iemppo {

struct StepResult {
  Vec next_state;
  double reward = 0.0;
  bool terminated = false;  // absorbing failure or goal
  bool truncated = false;   // time limit reached without termination
};

class EpisodeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Common episode bookkeeping for the built-in environments. Derived classes
/// supply dynamics; the base enforces action shape, the time limit, and the
/// reset-after-done rule.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string_view name() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  int state_dim() const { return static_cast<int>(state_low_.size()); }
  int action_dim() const { return static_cast<int>(action_low_.size()); }
  const Vec& state_low() const { return state_low_; }
  const Vec& state_high() const { return state_high_; }
  const Vec& action_low() const { return action_low_; }
  const Vec& action_high() const { return action_high_; }
  int max_episode_steps() const { return max_episode_steps_; }
  int elapsed_steps() const { return elapsed_; }
  bool episode_over() const { return done_; }

  Vec reset(Rng& rng);
  StepResult step(const Vec& action);
  virtual Vec observe() const = 0;

 protected:
  Env(Vec state_low, Vec state_high, Vec action_low, Vec action_high, int max_episode_steps);
  Env(const Env&) = default;

  virtual void reset_physics(Rng& rng) = 0;
  /// Advances the dynamics; returns (reward, terminated).
  virtual std::pair<double, bool> advance(const Vec& action) = 0;
  /// Starts a fresh episode at the current physical state.
  void begin_episode();

 private:
  Vec state_low_, state_high_, action_low_, action_high_;
  int max_episode_steps_;
  int elapsed_ = 0;
  bool done_ = true;
};

/// Swing-up pendulum. State (cos th, sin th, th_dot); torque in [-2, 2].
class PendulumEnv final : public Env {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr int kMaxSteps = 200;

  PendulumEnv();
  std::string_view name() const override { return "pendulum"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PendulumEnv>(*this); }
  Vec observe() const override;

  /// Places the pendulum and starts a new episode.
  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

  /// Angle wrapped into (-pi, pi].
  static double wrap_angle(double theta);

 protected:
  void reset_physics(Rng& rng) override;
  std::pair<double, bool> advance(const Vec& action) override;

 private:
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// Underpowered car in a valley; must rock to reach p >= 0.45.
class MountainCarEnv final : public Env {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.45;
  static constexpr double kPower = 0.0015;
  static constexpr double kGravity = 0.0025;
  static constexpr double kGoalReward = 100.0;
  static constexpr int kMaxSteps = 999;

  MountainCarEnv();
  std::string_view name() const override { return "mountaincar"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<MountainCarEnv>(*this); }
  Vec observe() const override;

  void set_state(double position, double velocity);
  double position() const { return position_; }
  double velocity() const { return velocity_; }

 protected:
  void reset_physics(Rng& rng) override;
  std::pair<double, bool> advance(const Vec& action) override;

 private:
  double position_ = -0.5;
  double velocity_ = 0.0;
};

/// 2-D point mass with a shaping decoy near the start and a distant goal.
/// The arena is walled: position is confined to [kArenaLow, kArenaHigh] per
/// axis and the velocity component into a wall is zeroed.
class PointTrapEnv final : public Env {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kMaxSpeed = 1.0;
  static constexpr double kGoalX = 5.0, kGoalY = 0.0, kGoalRadius = 0.5, kGoalReward = 500.0;
  static constexpr double kDecoyX = 1.5, kDecoyY = 0.0, kDecoyRadius = 0.5, kDecoyBonus = 2.0;
  static constexpr double kArenaLowX = -2.0, kArenaHighX = 7.0;
  static constexpr double kArenaLowY = -4.5, kArenaHighY = 4.5;
  static constexpr int kMaxSteps = 300;

  PointTrapEnv();
  std::string_view name() const override { return "pointtrap"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointTrapEnv>(*this); }
  Vec observe() const override;

  void set_state(double x, double y, double vx, double vy);

  /// Reward for occupying (x, y), excluding the goal bonus.
  static double position_reward(double x, double y);

 protected:
  void reset_physics(Rng& rng) override;
  std::pair<double, bool> advance(const Vec& action) override;

 private:
  double x_ = 0.0, y_ = 0.0, vx_ = 0.0, vy_ = 0.0;
};

std::unique_ptr<Env> make_env(std::string_view name);
const std::vector<std::string>& env_names();

}  // namespace iemppo
