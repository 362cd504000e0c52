#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "nlimb/env/cartpole.hpp"
#include "nlimb/env/lqr.hpp"
#include "nlimb/errors.hpp"
#include "nlimb/numerics/finite_diff.hpp"
#include "nlimb/numerics/gaussian.hpp"
#include "nlimb/rl/policy.hpp"
#include "nlimb/rl/ppo.hpp"
#include "nlimb/rl/rollout.hpp"
#include "nlimb/rl/training.hpp"

namespace nlimb {
namespace {

EnvFactory lqr_factory() {
  return [] { return std::unique_ptr<Environment>(new LqrEnv()); };
}

PolicyState small_policy(std::uint64_t seed, double log_std = -0.5) {
  Rng rng(seed);
  PolicyInit init;
  init.hidden = {8, 8};
  init.init_log_std = log_std;
  init.actor_output_scale = 1.0;
  return init_policy(2, LqrSpec{}.space, 1, init, rng);
}

RolloutBatch small_batch(const PolicyState& policy, int horizon = 40) {
  const std::vector<Eigen::VectorXd> designs = {Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(1.8, 0.1)};
  auto batch = collect_rollouts(policy, designs, lqr_factory(), horizon, {11, 12});
  compute_gae(batch, 0.99, 0.95);
  return batch;
}

TEST(PolicyTest, InputsAppendNormalizedDesign) {
  const auto p = small_policy(1);
  Eigen::MatrixXd states(2, 1), designs(2, 1);
  states << 0.3, -0.4;
  designs << 0.2, 1.0;  // lower gain bound, upper damping bound
  const auto in = policy_inputs(p, states, designs);
  EXPECT_EQ(in.rows(), 4);
  EXPECT_DOUBLE_EQ(in(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(in(2, 0), -1.0);
  EXPECT_DOUBLE_EQ(in(3, 0), 1.0);
}

TEST(PolicyTest, ActLogProbMatchesGaussian) {
  const auto p = small_policy(2);
  Rng rng(3);
  const Eigen::Vector2d s(0.5, 0.1), d(1.2, 0.3);
  const auto a = policy_act(p, s, d, rng);
  EXPECT_NEAR(a.log_prob, gaussian_log_prob(a.mean, p.log_std, a.action), 1e-14);
  const auto mean = policy_mean(p, Eigen::MatrixXd(s), Eigen::MatrixXd(d));
  EXPECT_DOUBLE_EQ(mean(0, 0), a.mean[0]);
  EXPECT_DOUBLE_EQ(policy_value(p, Eigen::MatrixXd(s), Eigen::MatrixXd(d))[0], a.value);
}

TEST(RolloutTest, LayoutAndDeterminism) {
  const auto p = small_policy(4);
  const auto a = small_batch(p);
  const auto b = small_batch(p);
  EXPECT_EQ(a.size(), 80);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.designs.col(0), Eigen::Vector2d(1.0, 0.5));
  EXPECT_EQ(a.designs.col(79), Eigen::Vector2d(1.8, 0.1));
  // Stored log-probabilities belong to the stored actions.
  for (Eigen::Index i = 0; i < a.size(); i += 7) {
    const auto t = transition_at(a, i);
    const auto mean = policy_mean(p, Eigen::MatrixXd(t.state), Eigen::MatrixXd(t.design));
    EXPECT_NEAR(t.log_prob, gaussian_log_prob(mean.col(0), p.log_std, t.action), 1e-12);
  }
}

TEST(RolloutTest, ParallelCollectionMatchesSerialToRounding) {
  const auto p = small_policy(5);
  std::vector<Eigen::VectorXd> designs;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 5; ++i) {
    designs.push_back(Eigen::Vector2d(0.3 + 0.3 * i, 0.2));
    seeds.push_back(100 + i);
  }
  const auto serial = collect_rollouts(p, designs, lqr_factory(), 30, seeds, WorkerPool(1));
  const auto parallel = collect_rollouts(p, designs, lqr_factory(), 30, seeds, WorkerPool(3));
  // Batched products over different column counts may round differently.
  EXPECT_LT((serial.states - parallel.states).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((serial.rewards - parallel.rewards).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((serial.log_probs - parallel.log_probs).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(collect_rollouts(p, designs, lqr_factory(), 30, seeds, WorkerPool(3)).states,
            parallel.states);
}

TEST(RolloutTest, EpisodesResetInsideSegments) {
  Rng rng(1);
  PolicyInit init;
  init.hidden = {4};
  const auto p = init_policy(4, CartPoleSpec{}.space, 1, init, rng);
  const auto f = [] { return std::unique_ptr<Environment>(new CartPoleEnv()); };
  const auto b = collect_rollouts(p, {Eigen::Vector2d(0.5, 0.1)}, f, 300, {3});
  int dones = 0;
  for (auto d : b.dones) dones += d;
  EXPECT_GT(dones, 1);  // a random policy drops the pole quickly
  const auto eps = completed_episode_returns(b, 0);
  EXPECT_EQ(static_cast<int>(eps.size()), dones);
  for (double r : eps) EXPECT_EQ(r, std::floor(r));  // unit alive reward
  EXPECT_DOUBLE_EQ(segment_mean_returns(b)[0],
                   std::accumulate(eps.begin(), eps.end(), 0.0) / static_cast<double>(eps.size()));
}

TEST(GaeTest, MatchesHandRecursion) {
  RolloutBatch b;
  b.num_segments = 2;
  b.segment_length = 4;
  b.rewards = (Eigen::VectorXd(8) << 1, 0.5, -1, 2, 0, 1, 1, 1).finished();
  b.values = (Eigen::VectorXd(8) << 0.2, 0.1, 0.4, -0.3, 1, 0.5, 0.2, 0.1).finished();
  b.dones = {0, 1, 0, 0, 0, 0, 0, 1};
  b.bootstrap_values = Eigen::Vector2d(0.7, 9.0);
  compute_gae(b, 0.9, 0.8, false);
  const double g = 0.9, l = 0.8;
  // Segment 0: the step-1 done stops bootstrapping; step 3 uses 0.7.
  const double d3 = 2 + g * 0.7 - (-0.3);
  const double d2 = -1 + g * -0.3 - 0.4;
  const double d1 = 0.5 - 0.1;
  const double d0 = 1 + g * 0.1 - 0.2;
  const double a3 = d3, a2 = d2 + g * l * a3, a1 = d1, a0 = d0 + g * l * a1;
  // Segment 1 ends in a terminal step, so its bootstrap value is ignored.
  const double e3 = 1 - 0.1;
  const double e2 = 1 + g * 0.1 - 0.2;
  const double e1 = 1 + g * 0.2 - 0.5;
  const double e0 = 0 + g * 0.5 - 1;
  const double b3 = e3, b2 = e2 + g * l * b3, b1 = e1 + g * l * b2, b0 = e0 + g * l * b1;
  const Eigen::VectorXd expected = (Eigen::VectorXd(8) << a0, a1, a2, a3, b0, b1, b2, b3).finished();
  EXPECT_LT((b.advantages - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((b.value_targets - (expected + b.values)).cwiseAbs().maxCoeff(), 1e-14);

  compute_gae(b, 0.9, 0.8, true);
  EXPECT_NEAR(b.advantages.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(b.advantages.array().square().mean()), 1.0, 1e-6);
}

TEST(SurrogateTest, ClippingCases) {
  // Inside the trust region the surrogate is r A.
  auto t = clipped_surrogate(1.1, 2.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, 2.2);
  EXPECT_DOUBLE_EQ(t.d_log_prob, 2.2);
  // Positive advantage above 1 + eps: clipped, zero gradient.
  t = clipped_surrogate(1.5, 2.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, 2.4);
  EXPECT_EQ(t.d_log_prob, 0.0);
  // Negative advantage below 1 - eps: clipped, zero gradient.
  t = clipped_surrogate(0.5, -1.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, -0.8);
  EXPECT_EQ(t.d_log_prob, 0.0);
  // Negative advantage above 1 + eps: the unclipped term is the minimum.
  t = clipped_surrogate(1.5, -1.0, 0.2);
  EXPECT_DOUBLE_EQ(t.value, -1.5);
  EXPECT_DOUBLE_EQ(t.d_log_prob, -1.5);
  // At r = 1 the clipped and vanilla objectives agree.
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.0, 0.7, 0.2).value, 0.7);
}

TEST(PpoTest, ActorGradientMatchesFiniteDifferences) {
  const auto p = small_policy(6);
  auto batch = small_batch(p, 20);
  // Perturb the policy so ratios differ from one, some of them clipped.
  PolicyState q = p;
  Rng rng(9);
  q.actor.flat() += 0.05 * standard_normal_vector(rng, q.actor.size());
  q.log_std.array() += 0.1;
  for (auto kind : {PolicyObjective::kClipped, PolicyObjective::kVanilla}) {
    const auto obj = actor_objective(q, batch, {}, kind, 0.2, 0.01);
    Eigen::VectorXd flat(q.actor.size() + 1);
    flat << q.actor.flat(), q.log_std;
    auto f = [&](const Eigen::VectorXd& x) {
      PolicyState r = q;
      r.actor.flat() = x.head(q.actor.size());
      r.log_std = x.tail(1);
      return actor_objective(r, batch, {}, kind, 0.2, 0.01).value;
    };
    const auto fd = finite_diff_grad(f, flat, 1e-6);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    // Kinks of the clip can straddle the probe; allow the rare coordinate.
    int bad = 0;
    for (Eigen::Index i = 0; i < fd.size(); ++i)
      if (std::abs(fd[i] - obj.gradient[i]) > 1e-5 * scale) ++bad;
    EXPECT_LE(bad, 1) << "objective kind " << static_cast<int>(kind);
  }
}

TEST(PpoTest, AtOldPolicyClippedEqualsRatioObjective) {
  const auto p = small_policy(7);
  const auto batch = small_batch(p, 20);
  const auto clipped = actor_objective(p, batch, {}, PolicyObjective::kClipped, 0.2, 0.0);
  EXPECT_NEAR(clipped.surrogate, batch.advantages.mean(), 1e-12);
  EXPECT_NEAR(clipped.approx_kl, 0.0, 1e-12);
  EXPECT_EQ(clipped.clip_fraction, 0.0);
}

TEST(PpoTest, CriticGradientMatchesFiniteDifferences) {
  const auto p = small_policy(8);
  const auto batch = small_batch(p, 20);
  std::vector<Eigen::Index> idx = {0, 3, 5, 17, 30, 39};
  const auto loss = critic_loss(p, batch, idx, 0.5);
  auto f = [&](const Eigen::VectorXd& x) {
    PolicyState r = p;
    r.critic.flat() = x;
    return critic_loss(r, batch, idx, 0.5).value;
  };
  const auto fd = finite_diff_grad(f, Eigen::VectorXd(p.critic.flat()), 1e-6);
  EXPECT_LT((fd - loss.gradient).cwiseAbs().maxCoeff(), 1e-7);
  double mse = 0.0;
  const auto v = policy_value(p, batch.states(Eigen::all, idx), batch.designs(Eigen::all, idx));
  for (std::size_t i = 0; i < idx.size(); ++i)
    mse += std::pow(v[static_cast<Eigen::Index>(i)] - batch.value_targets[idx[i]], 2);
  EXPECT_NEAR(loss.value, 0.5 * 0.5 * mse / idx.size(), 1e-12);
}

TEST(PpoTest, UpdateIsDeterministicAndImprovesSurrogate) {
  auto p = small_policy(10);
  auto q = p;
  const auto batch = small_batch(p, 64);
  PpoConfig cfg;
  cfg.minibatch_size = 32;
  auto oa = make_ppo_optimizer(p), ob = make_ppo_optimizer(q);
  Rng ra(1), rb(1);
  const auto before = actor_objective(p, batch, {}, PolicyObjective::kClipped, 0.2, 0.0);
  const auto sa = ppo_update(p, oa, batch, cfg, ra);
  ppo_update(q, ob, batch, cfg, rb);
  EXPECT_EQ(p.actor.flat(), q.actor.flat());
  EXPECT_EQ(p.critic.flat(), q.critic.flat());
  EXPECT_EQ(sa.updates, cfg.epochs * 4);
  const auto after = actor_objective(p, batch, {}, PolicyObjective::kClipped, 0.2, 0.0);
  EXPECT_GT(after.surrogate, before.surrogate);
}

TEST(PpoTest, ConfigValidationNamesKey) {
  PpoConfig cfg;
  cfg.clip = 1.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "ppo.clip");
  }
}

TEST(EvaluateTest, DeterministicAndCounted) {
  const auto p = small_policy(12);
  const auto a = evaluate_design(p, lqr_factory(), Eigen::Vector2d(1, 0.5), 3, 5);
  const auto b = evaluate_design(p, lqr_factory(), Eigen::Vector2d(1, 0.5), 3, 5);
  EXPECT_EQ(a.mean_return, b.mean_return);
  EXPECT_EQ(a.episode_returns.size(), 3u);
  EXPECT_EQ(a.timesteps, 600);
  const auto many = evaluate_designs(p, lqr_factory(), {Eigen::Vector2d(1, 0.5)}, 3, {5});
  EXPECT_EQ(many[0].mean_return, a.mean_return);
}

TEST(TrainingTest, FixedDesignLqrImproves) {
  PolicyInit init;
  init.hidden = {32, 32};
  auto setup = make_training_setup(lqr_factory(), init, PpoConfig{}, 4, 400, 20);
  Rng rng(1);
  auto policy = init_policy(2, setup.space, 1, init, rng);
  auto opt = make_ppo_optimizer(policy);
  const Eigen::Vector2d d(1.5, 0.3);
  const double start = evaluate_design(policy, setup.env_factory, d, 20, 3).mean_return;
  const std::vector<Eigen::VectorXd> designs(4, d);
  for (std::uint64_t it = 0; it < 40; ++it)
    ppo_iteration(policy, opt, setup, designs, {it * 4, it * 4 + 1, it * 4 + 2, it * 4 + 3}, it);
  const double end = evaluate_design(policy, setup.env_factory, d, 20, 3).mean_return;
  EXPECT_GT(end, start);
  EXPECT_GT(end, 1.5 * lqr_optimal_return(LqrSpec{}, d));
}

}  // namespace
}  // namespace nlimb
