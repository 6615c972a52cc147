#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "iemppo/ppo.hpp"
#include "synthetic.hpp"
#include "test_support.hpp"

using namespace iemppo;
using iemppo::testing::finite_difference;
using iemppo::testing::gradient_close;
using iemppo::testing::synthetic_batch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GaussianPolicy small_policy(std::uint64_t seed, int state_dim = 3, int action_dim = 1) {
  Rng rng(seed);
  return GaussianPolicy(nn::Mlp(nn::MlpSpec{state_dim, {64, 64}, action_dim}, rng), Vec::Constant(action_dim, -2.0),
                        Vec::Constant(action_dim, 2.0));
}

// The per-sample clipped term written out branch by branch.
double clip_reference(double r, double a, double eps) {
  const double lo = 1.0 - eps, hi = 1.0 + eps;
  const double c = r < lo ? lo : (r > hi ? hi : r);
  const double x = r * a, y = c * a;
  return x < y ? x : y;
}

double surrogate_at(GaussianPolicy policy, const std::vector<double>& flat, const Batch& b,
                    const std::vector<int>& idx, double sigma, double eps) {
  policy.net.params.assign_flat(flat);
  double total = 0.0;
  for (int k : idx) {
    const double lp = log_prob(policy.mean(b.states.col(k)), sigma, b.actions.col(k));
    const double ratio = std::exp(lp - b.log_probs_old[k]);
    total += std::isinf(eps) ? ratio * b.advantages[k] : clip_reference(ratio, b.advantages[k], eps);
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

TEST(ClipObjective, Examples) {
  EXPECT_DOUBLE_EQ(clip_objective(1.3, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clip_objective(0.5, -1.0, 0.2), -0.8);
  for (double a : {-3.0, -0.5, 0.0, 0.25, 7.0}) EXPECT_EQ(clip_objective(1.0, a, 0.2), a);
}

TEST(ClipObjective, GridMatchesDirectFormula) {
  for (int i = 0; i < 1000; ++i) {
    const double r = 0.01 + (3.0 - 0.01) * i / 999.0;
    for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      for (double eps : {0.1, 0.2, 0.3}) {
        EXPECT_NEAR(clip_objective(r, a, eps), clip_reference(r, a, eps), 1e-12);
      }
    }
  }
}

TEST(ClipObjective, NeverExceedsUnclippedTerm) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double r = iemppo::testing::uniform(rng, 1e-3, 5.0);
    const double a = iemppo::testing::uniform(rng, -10.0, 10.0);
    const double eps = iemppo::testing::uniform(rng, 0.01, 0.99);
    ASSERT_LE(clip_objective(r, a, eps), r * a);
  }
}

TEST(ClipObjective, FlatOutsideTheTrustRegion) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double eps = iemppo::testing::uniform(rng, 0.05, 0.5);
    const double a = iemppo::testing::uniform(rng, 0.1, 5.0);
    const double r1 = 1.0 + eps + iemppo::testing::uniform(rng, 0.0, 3.0);
    const double r2 = 1.0 + eps + iemppo::testing::uniform(rng, 0.0, 3.0);
    ASSERT_EQ(clip_objective(r1, a, eps), clip_objective(r2, a, eps));
    const double s1 = iemppo::testing::uniform(rng, 1e-3, 1.0 - eps);
    const double s2 = iemppo::testing::uniform(rng, 1e-3, 1.0 - eps);
    ASSERT_EQ(clip_objective(s1, -a, eps), clip_objective(s2, -a, eps));
  }
}

TEST(PpoConfig, Validation) {
  PpoConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.clip_epsilon = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = PpoConfig{};
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = PpoConfig{};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = PpoConfig{};
  cfg.kl_limit = kInf;
  cfg.clip_epsilon = kInf;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Surrogate, GradientMatchesFiniteDifferences) {
  auto policy = small_policy(3, 2, 2);
  Rng rng(4);
  auto batch = synthetic_batch(policy, 12, 0.5, 1.0, rng);
  // Move the policy so some ratios leave the trust region.
  auto params = policy.net.params.flatten();
  for (auto& p : params) p += iemppo::testing::uniform(rng, -0.05, 0.05);
  policy.net.params.assign_flat(params);
  std::vector<int> idx{0, 2, 3, 5, 7, 8, 11};
  for (double eps : {0.2, kInf}) {
    const auto eval = clipped_surrogate(policy, batch, idx, 0.5, eps);
    EXPECT_NEAR(eval.objective, surrogate_at(policy, params, batch, idx, 0.5, eps), 1e-12);
    const auto numeric = finite_difference(
        [&](const std::vector<double>& f) { return -surrogate_at(policy, f, batch, idx, 0.5, eps); }, params, 1e-6);
    const auto analytic = eval.loss_grads.flatten();
    int checked = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      EXPECT_TRUE(gradient_close(analytic[i], numeric[i], 1e-4, 1e-8)) << "eps " << eps << " param " << i;
      ++checked;
    }
    EXPECT_EQ(checked, static_cast<int>(policy.net.spec.num_params()));
  }
}

// With eps = inf and kl = inf one epoch is plain ascent on mean(r * A); at the
// collection point r = 1 so the gradient is mean(A * grad log pi).
TEST(Surrogate, UnclippedEqualsVanillaPolicyGradient) {
  auto policy = small_policy(5);
  Rng rng(6);
  const auto batch = synthetic_batch(policy, 8, 0.4, 1.0, rng);
  std::vector<int> idx{0, 1, 2, 3, 4, 5, 6, 7};
  const auto eval = clipped_surrogate(policy, batch, idx, 0.4, kInf);
  // grad log pi wrt mean = (a - mu) / sigma^2, pushed through the network.
  Mat out_grad(1, 8);
  for (int i = 0; i < 8; ++i) {
    const Vec mu = policy.mean(batch.states.col(i));
    out_grad(0, i) = -batch.advantages[i] * (batch.actions(0, i) - mu[0]) / (0.4 * 0.4) / 8.0;
  }
  nn::ForwardCache cache;
  policy.net.batch(batch.states, &cache);
  const auto expected = nn::backward_batch(policy.net.spec, policy.net.params, cache, out_grad).params.flatten();
  const auto got = eval.loss_grads.flatten();
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
}

TEST(PolicyUpdate, ZeroAdvantagesLeaveParamsUnchanged) {
  auto policy = small_policy(7);
  Rng rng(8);
  auto batch = synthetic_batch(policy, 256, 0.5, 0.0, rng);
  const auto before = policy.net.params;
  PpoConfig cfg;
  auto adam = nn::AdamState::for_spec(policy.net.spec, cfg.policy_lr);
  Rng shuffle(9);
  const auto stats = policy_update(policy, batch, 0.5, cfg, adam, shuffle);
  EXPECT_TRUE(policy.net.params == before);
  EXPECT_EQ(stats.epochs_run, 80);
  EXPECT_NEAR(stats.final_kl, 0.0, 1e-15);
}

TEST(PolicyUpdate, UnchangedParamsGiveZeroKl) {
  const auto policy = small_policy(10);
  Rng rng(11);
  const auto batch = synthetic_batch(policy, 100, 0.3, 1.0, rng);
  EXPECT_EQ(mean_kl(policy, batch, 0.3), 0.0);
}

TEST(PolicyUpdate, HighAdvantageActionBecomesMoreLikely) {
  auto policy = small_policy(12);
  Rng rng(13);
  auto batch = synthetic_batch(policy, 64, 0.5, 0.0, rng);
  batch.advantages[17] = 5.0;
  PpoConfig cfg;
  cfg.epochs = 1;
  auto adam = nn::AdamState::for_spec(policy.net.spec, cfg.policy_lr);
  Rng shuffle(14);
  const double before = log_prob(policy.mean(batch.states.col(17)), 0.5, batch.actions.col(17));
  policy_update(policy, batch, 0.5, cfg, adam, shuffle);
  const double after = log_prob(policy.mean(batch.states.col(17)), 0.5, batch.actions.col(17));
  EXPECT_GT(after, before);
}

TEST(PolicyUpdate, KlEarlyStopping) {
  const auto initial = small_policy(15);
  Rng rng(16);
  const auto batch = synthetic_batch(initial, 1000, 0.5, 100.0, rng);
  PpoConfig cfg;
  {
    auto policy = initial;
    auto adam = nn::AdamState::for_spec(policy.net.spec, cfg.policy_lr);
    Rng shuffle(17);
    const auto stats = policy_update(policy, batch, 0.5, cfg, adam, shuffle);
    EXPECT_LT(stats.epochs_run, 80);
    EXPECT_GT(stats.final_kl, cfg.kl_limit);
  }
  {
    cfg.kl_limit = kInf;
    auto policy = initial;
    auto adam = nn::AdamState::for_spec(policy.net.spec, cfg.policy_lr);
    Rng shuffle(17);
    EXPECT_EQ(policy_update(policy, batch, 0.5, cfg, adam, shuffle).epochs_run, 80);
  }
}

TEST(PolicyUpdate, EmptyBatchIsAnError) {
  auto policy = small_policy(18);
  Batch empty;
  PpoConfig cfg;
  auto adam = nn::AdamState::for_spec(policy.net.spec, cfg.policy_lr);
  Rng shuffle(1);
  EXPECT_THROW(policy_update(policy, empty, 0.5, cfg, adam, shuffle), ConfigError);
}

TEST(PolicyUpdate, NonFiniteLossReportsEpochAndMinibatch) {
  auto policy = small_policy(19);
  Rng rng(20);
  auto batch = synthetic_batch(policy, 100, 0.5, 1.0, rng);
  batch.advantages[3] = std::numeric_limits<double>::quiet_NaN();
  PpoConfig cfg;
  auto adam = nn::AdamState::for_spec(policy.net.spec, cfg.policy_lr);
  Rng shuffle(1);
  try {
    policy_update(policy, batch, 0.5, cfg, adam, shuffle);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("minibatch"), std::string::npos) << msg;
  }
}

TEST(ValueUpdate, MatchedTargetsLeaveParamsUnchanged) {
  Rng rng(21);
  nn::Mlp value(nn::MlpSpec{3, {64, 64}, 1}, rng);
  const Mat states = iemppo::testing::random_mat(rng, 3, 200);
  const Vec targets = value.batch(states).row(0).transpose();
  const auto before = value.params;
  PpoConfig cfg;
  cfg.epochs = 5;
  auto adam = nn::AdamState::for_spec(value.spec, cfg.value_lr);
  Rng shuffle(1);
  EXPECT_EQ(value_update(value, states, targets, cfg, adam, shuffle), 0.0);
  EXPECT_TRUE(value.params == before);
}

TEST(ValueUpdate, OverfitsASingleSample) {
  Rng rng(22);
  nn::Mlp value(nn::MlpSpec{3, {64, 64}, 1}, rng);
  const Mat state = iemppo::testing::random_mat(rng, 3, 1);
  const Vec target = Vec::Constant(1, -4.2);
  PpoConfig cfg;
  cfg.epochs = 2000;
  auto adam = nn::AdamState::for_spec(value.spec, cfg.value_lr);
  Rng shuffle(1);
  value_update(value, state, target, cfg, adam, shuffle);
  EXPECT_NEAR(value(state.col(0))[0], -4.2, 1e-2);
}

TEST(ValueUpdate, LossTrendsDownOnAFixedBatch) {
  Rng rng(23);
  nn::Mlp value(nn::MlpSpec{3, {64, 64}, 1}, rng);
  const Mat states = iemppo::testing::random_mat(rng, 3, 512);
  Vec targets(512);
  for (int i = 0; i < 512; ++i) targets[i] = std::sin(2.0 * states(0, i)) + states(1, i) * states(2, i);
  PpoConfig cfg;
  cfg.epochs = 1;
  auto adam = nn::AdamState::for_spec(value.spec, cfg.value_lr);
  Rng shuffle(1);
  std::vector<double> trace;
  for (int e = 0; e < 60; ++e) trace.push_back(value_update(value, states, targets, cfg, adam, shuffle));
  // Average over windows: individual epochs may tick up, the trend may not.
  auto window = [&](int from) { return (trace[from] + trace[from + 1] + trace[from + 2] + trace[from + 3]) / 4.0; };
  for (int w = 0; w + 8 <= 60; w += 4) EXPECT_LE(window(w + 4), window(w) * 1.05) << "window " << w;
  EXPECT_LT(trace.back(), 0.2 * trace.front());
}

TEST(ValueUpdate, LengthMismatch) {
  Rng rng(24);
  nn::Mlp value(nn::MlpSpec{3, {4}, 1}, rng);
  PpoConfig cfg;
  auto adam = nn::AdamState::for_spec(value.spec, cfg.value_lr);
  EXPECT_THROW(value_update(value, Mat::Zero(3, 5), Vec::Zero(4), cfg, adam, rng), ShapeError);
}

TEST(Minibatches, PartitionEveryIndexOnce) {
  Rng rng(25);
  const auto chunks = minibatches(130, 64, rng);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[2].size(), 2u);
  std::vector<int> seen(130, 0);
  for (const auto& c : chunks) {
    for (int i : c) ++seen[static_cast<std::size_t>(i)];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}
