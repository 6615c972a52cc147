#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "iemppo/policy.hpp"
#include "test_support.hpp"

using namespace iemppo;

namespace {

GaussianPolicy make_policy(int state_dim, int action_dim, double bound, std::uint64_t seed) {
  Rng rng(seed);
  nn::Mlp net(nn::MlpSpec{state_dim, {16}, action_dim}, rng);
  return GaussianPolicy(std::move(net), Vec::Constant(action_dim, -bound), Vec::Constant(action_dim, bound));
}

// ln of the normal density written as the density itself, then logged.
double log_density_1d(double mean, double sigma, double a) {
  const double density = std::exp(-0.5 * std::pow((a - mean) / sigma, 2)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  return std::log(density);
}

}  // namespace

TEST(Act, ZeroSigmaReturnsTheMean) {
  const auto policy = make_policy(3, 2, 100.0, 1);
  Rng rng(2);
  const Vec s = Vec::Constant(3, 0.4);
  const auto r = act(policy, s, 0.0, rng);
  EXPECT_EQ(r.action, policy.mean(s));
  EXPECT_EQ(r.mean, policy.mean(s));
}

TEST(Act, FixedSeedIsDeterministic) {
  const auto policy = make_policy(3, 2, 1.0, 1);
  const Vec s = Vec::Constant(3, -0.2);
  Rng a(9), b(9);
  const auto ra = act(policy, s, 0.6, a);
  const auto rb = act(policy, s, 0.6, b);
  EXPECT_EQ(ra.action, rb.action);
  EXPECT_EQ(ra.sample, rb.sample);
  EXPECT_EQ(ra.log_prob, rb.log_prob);
}

TEST(Act, ClampsActionButScoresTheRawSample) {
  const auto policy = make_policy(2, 2, 0.05, 3);
  Rng rng(4);
  const Vec s = Vec::Constant(2, 0.3);
  bool saw_clamp = false;
  for (int i = 0; i < 200; ++i) {
    const auto r = act(policy, s, 1.0, rng);
    EXPECT_TRUE((r.action.array() >= -0.05).all() && (r.action.array() <= 0.05).all());
    EXPECT_DOUBLE_EQ(r.log_prob, log_prob(r.mean, 1.0, r.sample));
    saw_clamp |= r.action != r.sample;
  }
  EXPECT_TRUE(saw_clamp);
}

TEST(Act, MonteCarloMomentsMatchSigma) {
  const auto policy = make_policy(2, 3, 1e6, 5);
  const Vec s(Vec::Constant(2, 0.7));
  const Vec mu = policy.mean(s);
  const double sigma = 0.6;
  const int n = 100000;
  Rng rng(6);
  Vec sum = Vec::Zero(3), sum_sq = Vec::Zero(3);
  for (int i = 0; i < n; ++i) {
    const Vec a = act(policy, s, sigma, rng).action;
    sum += a;
    sum_sq += (a - mu).cwiseAbs2();
  }
  const Vec mean = sum / n;
  for (int d = 0; d < 3; ++d) {
    EXPECT_LT(std::abs(mean[d] - mu[d]), 3.0 * sigma / std::sqrt(static_cast<double>(n)));
    const double sd = std::sqrt(sum_sq[d] / n);
    EXPECT_LT(std::abs(sd - sigma) / sigma, 0.02);
  }
}

TEST(Act, NonFiniteStateThrows) {
  const auto policy = make_policy(2, 1, 1.0, 7);
  Rng rng(1);
  EXPECT_THROW(act(policy, Vec::Constant(2, std::nan("")), 0.5, rng), NumericError);
}

TEST(Policy, RejectsBadBounds) {
  Rng rng(1);
  nn::Mlp net(nn::MlpSpec{2, {4}, 2}, rng);
  EXPECT_THROW(GaussianPolicy(net, Vec::Constant(2, 1.0), Vec::Constant(2, 1.0)), ConfigError);
  EXPECT_THROW(GaussianPolicy(net, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)), ShapeError);
}

TEST(LogProb, StandardNormalAtMode) {
  EXPECT_NEAR(log_prob(Vec::Zero(1), 1.0, Vec::Zero(1)), -0.9189385332046727, 1e-15);
}

TEST(LogProb, OneSigmaPoint) {
  Vec mu(1), a(1);
  mu << 0.25;
  a << 1.25;
  EXPECT_NEAR(log_prob(mu, 1.0, a), -1.4189385332046727, 1e-15);
}

TEST(LogProb, MixedSigmaIsSumOfOneDimensionalTerms) {
  Vec mu(3), sigma(3), a(3);
  mu << 0.1, -0.4, 2.0;
  sigma << 0.2, 1.5, 0.05;
  a << 0.35, 0.9, 1.98;
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) expected += log_density_1d(mu[i], sigma[i], a[i]);
  EXPECT_NEAR(log_prob(mu, sigma, a), expected, 1e-12);
}

TEST(LogProb, ScalarSigmaBroadcasts) {
  Vec mu(2), a(2);
  mu << 0.0, 1.0;
  a << 0.3, 0.2;
  EXPECT_EQ(log_prob(mu, 0.7, a), log_prob(mu, Vec::Constant(2, 0.7), a));
}

TEST(LogProb, NonPositiveSigmaIsDomainError) {
  EXPECT_THROW(log_prob(Vec::Zero(1), 0.0, Vec::Zero(1)), std::domain_error);
  EXPECT_THROW(log_prob(Vec::Zero(2), Vec::Constant(2, -1.0), Vec::Zero(2)), std::domain_error);
  EXPECT_THROW(log_prob(Vec::Zero(2), 1.0, Vec::Zero(3)), ShapeError);
}

TEST(LogProb, DensityIntegratesToOne) {
  for (double sigma : {0.1, 0.6, 2.0}) {
    const double mu = 0.3;
    const int n = 20000;  // Simpson panels over [mu - 8 sigma, mu + 8 sigma]
    const double lo = mu - 8.0 * sigma, h = 16.0 * sigma / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::exp(log_prob(Vec::Constant(1, mu), sigma, Vec::Constant(1, lo + i * h)));
    }
    EXPECT_NEAR(acc * h / 3.0, 1.0, 1e-6) << "sigma " << sigma;
  }
}

TEST(LogProb, MaximizedAtTheMean) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = iemppo::testing::uniform_int(rng, 1, 4);
    const Vec mu = iemppo::testing::random_vec(rng, dim, 3.0);
    const double sigma = iemppo::testing::uniform(rng, 0.05, 3.0);
    const Vec delta = iemppo::testing::random_vec(rng, dim, 1e-3);
    EXPECT_GT(log_prob(mu, sigma, mu), log_prob(mu, sigma, Vec(mu + delta)));
  }
}

TEST(LogProb, BatchMatchesPerColumn) {
  Rng rng(12);
  const Mat means = iemppo::testing::random_mat(rng, 2, 6);
  const Mat actions = iemppo::testing::random_mat(rng, 2, 6);
  const Vec lp = log_prob_batch(means, 0.4, actions);
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(lp[c], log_prob(means.col(c), 0.4, actions.col(c)), 1e-13);
}

TEST(SigmaSchedule, LowerAnchorKeepsInitialSigma) {
  SigmaSchedule s(0.6, 0.1, -1400.0, -200.0);
  for (int i = 0; i < 100; ++i) s.update(-1600.0);
  EXPECT_EQ(s.sigma(), 0.6);
}

TEST(SigmaSchedule, UpperAnchorReachesSigmaMin) {
  SigmaSchedule s(0.6, 0.1, -1400.0, -200.0);
  for (int i = 0; i < 2000; ++i) s.update(0.0);
  EXPECT_GE(s.running_reward(), -200.0);
  EXPECT_EQ(s.sigma(), 0.1);
}

TEST(SigmaSchedule, MidpointInterpolatesOnFirstUpdate) {
  const double low = -1400.0, high = -200.0;
  SigmaSchedule s(0.6, 0.1, low, high);
  // running_reward starts at reward_low; this return moves the average to the midpoint.
  const double mid = 0.5 * (low + high);
  s.update((mid - 0.99 * low) / 0.01);
  EXPECT_NEAR(s.running_reward(), mid, 1e-9);
  EXPECT_NEAR(s.sigma(), 0.35, 1e-12);
}

TEST(SigmaSchedule, NeverIncreasesAndStaysInRange) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const double smin = iemppo::testing::uniform(rng, 0.01, 0.5);
    const double sinit = smin + iemppo::testing::uniform(rng, 0.0, 2.0);
    const double low = iemppo::testing::uniform(rng, -1000.0, 0.0);
    const double high = low + iemppo::testing::uniform(rng, 1.0, 1000.0);
    SigmaSchedule s(sinit, smin, low, high);
    double prev = s.sigma();
    for (int i = 0; i < 500; ++i) {
      s.update(iemppo::testing::uniform(rng, low - 2000.0, high + 2000.0));
      ASSERT_LE(s.sigma(), prev);
      ASSERT_GE(s.sigma(), smin);
      ASSERT_LE(s.sigma(), sinit);
      prev = s.sigma();
    }
  }
}

TEST(SigmaSchedule, InvalidConfigurations) {
  EXPECT_THROW(SigmaSchedule(0.6, 0.1, 5.0, 5.0), ConfigError);
  EXPECT_THROW(SigmaSchedule(0.6, 0.1, 5.0, 1.0), ConfigError);
  EXPECT_THROW(SigmaSchedule(0.05, 0.1, 0.0, 1.0), ConfigError);
  EXPECT_THROW(SigmaSchedule(0.6, 0.0, 0.0, 1.0), ConfigError);
}
