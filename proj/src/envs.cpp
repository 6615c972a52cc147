#include "iemppo/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace iemppo {

namespace {

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec vec3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }
Vec vec4(double a, double b, double c, double d) { return (Vec(4) << a, b, c, d).finished(); }

}  // namespace

Env::Env(Vec state_low, Vec state_high, Vec action_low, Vec action_high, int max_episode_steps)
    : state_low_(std::move(state_low)),
      state_high_(std::move(state_high)),
      action_low_(std::move(action_low)),
      action_high_(std::move(action_high)),
      max_episode_steps_(max_episode_steps) {}

Vec Env::reset(Rng& rng) {
  reset_physics(rng);
  begin_episode();
  return observe();
}

void Env::begin_episode() {
  elapsed_ = 0;
  done_ = false;
}

StepResult Env::step(const Vec& action) {
  if (done_) throw EpisodeError(std::string(name()) + ": step called on a finished episode; call reset first");
  if (action.size() != action_dim()) {
    throw ShapeError(std::string(name()) + ": action has " + std::to_string(action.size()) +
                     " components, expected " + std::to_string(action_dim()));
  }
  if (!action.allFinite()) throw NumericError(std::string(name()) + ": non-finite action");
  StepResult out;
  std::tie(out.reward, out.terminated) = advance(action);
  ++elapsed_;
  out.truncated = !out.terminated && elapsed_ >= max_episode_steps_;
  done_ = out.terminated || out.truncated;
  out.next_state = observe();
  return out;
}

// --- pendulum ---------------------------------------------------------------

PendulumEnv::PendulumEnv()
    : Env(vec3(-1.0, -1.0, -kMaxSpeed), vec3(1.0, 1.0, kMaxSpeed), Vec::Constant(1, -kMaxTorque),
          Vec::Constant(1, kMaxTorque), kMaxSteps) {}

double PendulumEnv::wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  double w = std::fmod(theta + pi, 2.0 * pi);
  if (w < 0.0) w += 2.0 * pi;
  w -= pi;
  // fmod maps +pi to -pi; the convention here is (-pi, pi].
  return w == -pi ? pi : w;
}

Vec PendulumEnv::observe() const { return vec3(std::cos(theta_), std::sin(theta_), theta_dot_); }

void PendulumEnv::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = std::clamp(theta_dot, -kMaxSpeed, kMaxSpeed);
  begin_episode();
}

void PendulumEnv::reset_physics(Rng& rng) {
  constexpr double pi = std::numbers::pi;
  std::uniform_real_distribution<double> angle(-pi, pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  // uniform_real_distribution draws [-pi, pi); reflect -pi onto +pi for (-pi, pi].
  theta_ = angle(rng);
  if (theta_ == -pi) theta_ = pi;
  theta_dot_ = speed(rng);
}

std::pair<double, bool> PendulumEnv::advance(const Vec& action) {
  const double u = std::clamp(action[0], -kMaxTorque, kMaxTorque);
  const double th = wrap_angle(theta_);
  const double reward = -(th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);
  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) + 3.0 / (kMass * kLength * kLength) * u;
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -kMaxSpeed, kMaxSpeed);
  theta_ = wrap_angle(theta_ + theta_dot_ * kDt);
  return {reward, false};
}

// --- mountain car -----------------------------------------------------------

MountainCarEnv::MountainCarEnv()
    : Env(vec2(kMinPosition, -kMaxSpeed), vec2(kMaxPosition, kMaxSpeed), Vec::Constant(1, -1.0),
          Vec::Constant(1, 1.0), kMaxSteps) {}

Vec MountainCarEnv::observe() const { return vec2(position_, velocity_); }

void MountainCarEnv::set_state(double position, double velocity) {
  position_ = std::clamp(position, kMinPosition, kMaxPosition);
  velocity_ = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
  begin_episode();
}

void MountainCarEnv::reset_physics(Rng& rng) {
  std::uniform_real_distribution<double> start(-0.6, -0.4);
  position_ = start(rng);
  velocity_ = 0.0;
}

std::pair<double, bool> MountainCarEnv::advance(const Vec& action) {
  const double force = std::clamp(action[0], -1.0, 1.0);
  velocity_ = velocity_ + force * kPower - kGravity * std::cos(3.0 * position_);
  velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
  position_ = std::clamp(position_ + velocity_, kMinPosition, kMaxPosition);
  if (position_ == kMinPosition && velocity_ < 0.0) velocity_ = 0.0;
  const bool goal = position_ >= kGoalPosition;
  double reward = -0.1 * force * force;
  if (goal) reward += kGoalReward;
  return {reward, goal};
}

// --- point trap -------------------------------------------------------------

PointTrapEnv::PointTrapEnv()
    : Env(vec4(kArenaLowX, kArenaLowY, -kMaxSpeed, -kMaxSpeed), vec4(kArenaHighX, kArenaHighY, kMaxSpeed, kMaxSpeed),
          Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), kMaxSteps) {}

Vec PointTrapEnv::observe() const { return vec4(x_, y_, vx_, vy_); }

void PointTrapEnv::set_state(double x, double y, double vx, double vy) {
  x_ = std::clamp(x, kArenaLowX, kArenaHighX);
  y_ = std::clamp(y, kArenaLowY, kArenaHighY);
  vx_ = std::clamp(vx, -kMaxSpeed, kMaxSpeed);
  vy_ = std::clamp(vy, -kMaxSpeed, kMaxSpeed);
  begin_episode();
}

void PointTrapEnv::reset_physics(Rng&) { x_ = y_ = vx_ = vy_ = 0.0; }

double PointTrapEnv::position_reward(double x, double y) {
  double r = -std::hypot(x - kGoalX, y - kGoalY);
  if (std::hypot(x - kDecoyX, y - kDecoyY) <= kDecoyRadius) r += kDecoyBonus;
  return r;
}

std::pair<double, bool> PointTrapEnv::advance(const Vec& action) {
  const double ax = std::clamp(action[0], -1.0, 1.0);
  const double ay = std::clamp(action[1], -1.0, 1.0);
  vx_ = std::clamp(vx_ + ax * kDt, -kMaxSpeed, kMaxSpeed);
  vy_ = std::clamp(vy_ + ay * kDt, -kMaxSpeed, kMaxSpeed);
  x_ += vx_ * kDt;
  y_ += vy_ * kDt;
  if (x_ < kArenaLowX || x_ > kArenaHighX) {
    x_ = std::clamp(x_, kArenaLowX, kArenaHighX);
    vx_ = 0.0;
  }
  if (y_ < kArenaLowY || y_ > kArenaHighY) {
    y_ = std::clamp(y_, kArenaLowY, kArenaHighY);
    vy_ = 0.0;
  }
  const bool goal = std::hypot(x_ - kGoalX, y_ - kGoalY) <= kGoalRadius;
  double reward = position_reward(x_, y_);
  if (goal) reward += kGoalReward;
  return {reward, goal};
}

// --- registry ---------------------------------------------------------------

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names{"pendulum", "mountaincar", "pointtrap"};
  return names;
}

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "mountaincar") return std::make_unique<MountainCarEnv>();
  if (name == "pointtrap") return std::make_unique<PointTrapEnv>();
  throw ConfigError("unknown environment '" + std::string(name) + "' (expected pendulum, mountaincar or pointtrap)");
}

}  // namespace iemppo
