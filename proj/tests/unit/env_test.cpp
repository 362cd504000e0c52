#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "nlimb/env/cartpole.hpp"
#include "nlimb/env/lqr.hpp"
#include "nlimb/env/reacher.hpp"
#include "nlimb/errors.hpp"

namespace nlimb {
namespace {

// ---------------------------------------------------------------- cart-pole

TEST(CartPoleTest, EquilibriumIsFixed) {
  const auto t = cartpole_step({}, Eigen::Vector4d::Zero(), 0.0, Eigen::Vector2d(0.5, 0.1));
  EXPECT_EQ(t.state, Eigen::Vector4d::Zero());
  EXPECT_FALSE(t.terminated);
  EXPECT_EQ(t.reward, 1.0);
}

TEST(CartPoleTest, StepMatchesHandEvaluatedEquations) {
  const double g = 9.8, mc = 1.0, mp = 0.3, l = 0.8, dt = 0.02, f = 10.0 * 0.4;
  const double x = 0.1, xd = -0.2, th = 0.05, thd = 0.3;
  const double total = mc + mp;
  const double temp = (f + mp * l * thd * thd * std::sin(th)) / total;
  const double thacc = (g * std::sin(th) - std::cos(th) * temp) /
                       (l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / total));
  const double xacc = temp - mp * l * thacc * std::cos(th) / total;
  const double xd1 = xd + dt * xacc, thd1 = thd + dt * thacc;
  const Eigen::Vector4d expected(x + dt * xd1, xd1, th + dt * thd1, thd1);

  const auto t = cartpole_step({}, Eigen::Vector4d(x, xd, th, thd), 0.4, Eigen::Vector2d(l, mp));
  EXPECT_LT((t.state - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CartPoleTest, ActionIsClippedAndPenalized) {
  CartPoleSpec spec;
  spec.weights.action_cost = 0.5;
  const Eigen::Vector2d d(0.5, 0.1);
  const auto a = cartpole_step(spec, Eigen::Vector4d::Zero(), 7.0, d);
  const auto b = cartpole_step(spec, Eigen::Vector4d::Zero(), 1.0, d);
  EXPECT_EQ(a.state, b.state);
  EXPECT_DOUBLE_EQ(a.reward, 0.5);
  EXPECT_THROW(cartpole_step(spec, Eigen::Vector4d::Zero(), std::nan(""), d), NumericError);
}

TEST(CartPoleTest, TerminatesOutsideLimits) {
  const Eigen::Vector2d d(0.5, 0.1);
  EXPECT_TRUE(cartpole_step({}, Eigen::Vector4d(0, 0, 0.3, 0), 0.0, d).terminated);
  EXPECT_TRUE(cartpole_step({}, Eigen::Vector4d(2.5, 0, 0, 0), 0.0, d).terminated);
}

TEST(CartPoleTest, BalancedEpisodeReturnsStepCap) {
  // A strong PD controller keeps the pole up for the whole episode.
  CartPoleEnv env;
  Rng rng(1);
  Eigen::VectorXd s = env.reset(Eigen::Vector2d(0.5, 0.1), rng);
  double total = 0.0;
  int steps = 0;
  while (true) {
    const double a = std::clamp(5.0 * s[2] + 1.0 * s[3] + 0.1 * s[0] + 0.3 * s[1], -1.0, 1.0);
    const auto r = env.step(Eigen::VectorXd::Constant(1, a));
    total += r.reward;
    ++steps;
    s = r.state;
    if (r.done) break;
  }
  EXPECT_EQ(steps, 500);
  EXPECT_EQ(total, 500.0);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(1)), ContractError);
}

// ---------------------------------------------------------------------- LQR

TEST(LqrTest, OriginAndHandArithmetic) {
  const LqrSpec spec;
  const Eigen::Vector2d d(1.0, 0.5);
  const auto o = lqr_step(spec, Eigen::Vector2d::Zero(), 0.0, d);
  EXPECT_EQ(o.state, Eigen::Vector2d::Zero());
  EXPECT_EQ(o.reward, 0.0);
  const auto t = lqr_step(spec, Eigen::Vector2d(1.0, 0.0), 0.0, d);
  EXPECT_EQ(t.state, Eigen::Vector2d(1.0, 0.0));
  EXPECT_EQ(t.reward, -1.0);
  const auto u = lqr_step(spec, Eigen::Vector2d(0.5, 2.0), 3.0, Eigen::Vector2d(1.5, 0.2));
  EXPECT_DOUBLE_EQ(u.state[0], 0.5 + 0.05 * 2.0);
  EXPECT_DOUBLE_EQ(u.state[1], 2.0 + 0.05 * (1.5 * 3.0 - 0.2 * 2.0));
  EXPECT_DOUBLE_EQ(u.reward, -(0.25 + 0.1 * 9.0));
}

// Optimal finite-horizon cost by solving the whole-trajectory least-squares
// problem over the action sequence, without any Riccati recursion.
double batch_optimal_cost(const LqrSpec& spec, const Eigen::Vector2d& design, double x0) {
  const int h = spec.max_steps;
  const double dt = spec.dt, gain = design[0], c = design[1];
  // Position x_k = f_k x0 + sum_j G(k, j) a_j.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(h, h);
  Eigen::VectorXd f(h);
  Eigen::MatrixXd Gv = Eigen::MatrixXd::Zero(h, h);  // velocity sensitivities
  double x = 1.0, v = 0.0;
  for (int k = 0; k < h; ++k) {
    f[k] = x;
    const double xn = x + dt * v, vn = v - dt * c * v;
    x = xn;
    v = vn;
  }
  for (int k = 1; k < h; ++k) {
    G.row(k) = G.row(k - 1) + dt * Gv.row(k - 1);
    Gv.row(k) = (1 - dt * c) * Gv.row(k - 1);
    Gv(k, k - 1) += dt * gain;
  }
  const Eigen::MatrixXd H = G.transpose() * G + 0.1 * Eigen::MatrixXd::Identity(h, h);
  const Eigen::VectorXd a = -H.ldlt().solve(G.transpose() * f * x0);
  const Eigen::VectorXd xs = f * x0 + G * a;
  return xs.squaredNorm() + 0.1 * a.squaredNorm();
}

TEST(LqrTest, RiccatiMatchesBatchLeastSquares) {
  const LqrSpec spec;
  for (const Eigen::Vector2d& d : {Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(2.0, 0.159),
                                  Eigen::Vector2d(0.2, 1.0)}) {
    const double p00 = lqr_cost_to_go(spec, d)(0, 0);
    EXPECT_NEAR(p00, batch_optimal_cost(spec, d, 1.0), 1e-9 * p00);
    EXPECT_NEAR(lqr_optimal_return(spec, d), -p00 / 3.0, 1e-12 * p00);
  }
}

TEST(LqrTest, FeedbackGainsAchieveCostToGo) {
  const LqrSpec spec;
  const Eigen::Vector2d d(1.3, 0.4);
  const auto gains = lqr_feedback_gains(spec, d);
  Eigen::Vector2d s(0.7, 0.0);
  double ret = 0.0;
  for (int k = 0; k < spec.max_steps; ++k) {
    const double a = -(gains[static_cast<std::size_t>(k)] * s)(0);
    const auto t = lqr_step(spec, s, a, d);
    ret += t.reward;
    s = t.state;
  }
  EXPECT_NEAR(ret, -0.49 * lqr_cost_to_go(spec, d)(0, 0), 1e-10);
}

TEST(LqrTest, OracleGridProperties) {
  const LqrSpec spec;
  const auto one = lqr_design_oracle(spec, 1);
  EXPECT_TRUE(one.best_design.isApprox(Eigen::Vector2d(1.1, 0.525)));

  const auto o = lqr_design_oracle(spec, 21);
  // Higher gain never hurts for fixed damping.
  for (Eigen::Index j = 0; j < o.damping_grid.size(); ++j)
    for (Eigen::Index i = 1; i < o.gain_grid.size(); ++i)
      EXPECT_GE(o.expected_return(i, j), o.expected_return(i - 1, j) - 1e-12);
  EXPECT_DOUBLE_EQ(o.best_return, o.expected_return.maxCoeff());
  EXPECT_DOUBLE_EQ(o.best_design[0], 2.0);

  // A dominant design (more gain, less damping) beats the dominated one.
  EXPECT_GT(lqr_optimal_return(spec, Eigen::Vector2d(1.8, 0.3)),
            lqr_optimal_return(spec, Eigen::Vector2d(0.9, 0.3)));
}

TEST(LqrTest, EpisodesRunToStepCap) {
  LqrEnv env;
  Rng rng(3);
  const auto s0 = env.reset(Eigen::Vector2d(1.0, 0.5), rng);
  EXPECT_LE(std::abs(s0[0]), 1.0);
  EXPECT_EQ(s0[1], 0.0);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = env.step(Eigen::VectorXd::Constant(1, 0.1)).done;
    ++steps;
  }
  EXPECT_EQ(steps, 200);
}

// ------------------------------------------------------------------ reacher

TEST(ReacherTest, ForwardKinematics) {
  const Eigen::Vector2d d(0.7, 0.4);
  EXPECT_TRUE(reacher_end_effector(d, Eigen::Vector2d::Zero()).isApprox(Eigen::Vector2d(1.1, 0.0)));
  EXPECT_LT(reacher_end_effector(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.0, std::numbers::pi)).norm(),
            1e-15);
  const Eigen::Vector2d q(0.3, -1.1);
  const Eigen::Vector2d expected(0.7 * std::cos(0.3) + 0.4 * std::cos(0.3 - 1.1),
                                 0.7 * std::sin(0.3) + 0.4 * std::sin(0.3 - 1.1));
  EXPECT_TRUE(reacher_end_effector(d, q).isApprox(expected, 1e-15));
}

TEST(ReacherTest, StepClipsSpeedAndScoresDistance) {
  const ReacherSpec spec;
  const Eigen::Vector2d d(0.6, 0.6), target(1.0, 0.5);
  const auto t = reacher_step(spec, Eigen::Vector2d::Zero(), target, Eigen::Vector2d(5.0, -1.0), d);
  EXPECT_TRUE(t.joints.isApprox(Eigen::Vector2d(0.1, -0.05)));
  EXPECT_TRUE(t.end_effector.isApprox(reacher_end_effector(d, t.joints)));
  // Penalty on the clipped action (2, -1).
  EXPECT_NEAR(t.reward, -(t.end_effector - target).norm() - 0.01 * 5.0, 1e-14);
}

TEST(ReacherTest, AnnulusCoverage) {
  const ReacherSpec spec;
  EXPECT_TRUE(reacher_covers_annulus(spec, Eigen::Vector2d(1.0, 0.6)));
  EXPECT_FALSE(reacher_covers_annulus(spec, Eigen::Vector2d(0.6, 0.6)));
  EXPECT_FALSE(reacher_covers_annulus(spec, Eigen::Vector2d(1.2, 0.2)));
}

TEST(ReacherTest, TargetsLieOnAnnulus) {
  ReacherEnv env;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto s = env.reset(Eigen::Vector2d(0.6, 0.6), rng);
    const double r = env.target().norm();
    EXPECT_GE(r, 0.5);
    EXPECT_LE(r, 1.5);
    EXPECT_EQ(s.size(), 6);
  }
}

// ----------------------------------------------------------- shared contract

class ContractTest : public ::testing::TestWithParam<int> {
 protected:
  std::unique_ptr<Environment> make() const {
    switch (GetParam()) {
      case 0: return std::make_unique<CartPoleEnv>();
      case 1: return std::make_unique<LqrEnv>();
      default: return std::make_unique<ReacherEnv>();
    }
  }
};

TEST_P(ContractTest, RejectsMisuse) {
  auto env = make();
  Rng rng(1);
  const Eigen::VectorXd lo = env->design_space().lower();
  EXPECT_THROW(env->step(Eigen::VectorXd::Zero(env->action_dim())), ContractError);
  EXPECT_THROW(env->reset(Eigen::VectorXd::Zero(5), rng), ShapeError);
  EXPECT_THROW(env->reset(lo.array() - 1.0, rng), ContractError);
  env->reset(lo, rng);
  EXPECT_THROW(env->step(Eigen::VectorXd::Zero(env->action_dim() + 1)), ShapeError);
  EXPECT_THROW(env->step(Eigen::VectorXd::Constant(env->action_dim(), std::nan(""))), NumericError);
}

TEST_P(ContractTest, DeterministicAndFiniteUnderRandomActions) {
  auto a = make();
  auto b = make();
  Rng design_rng(GetParam() + 10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto& space = a->design_space();
    Eigen::VectorXd d(space.dimension());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      d[i] = uniform(design_rng, space.lower()[i], space.upper()[i]);
    Rng ra(trial), rb(trial), act(trial + 100);
    a->reset(d, ra);
    b->reset(d, rb);
    for (int k = 0;; ++k) {
      const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(
          a->action_dim(), [&] { return uniform(act, -3.0, 3.0); });
      const auto sa = a->step(u), sb = b->step(u);
      ASSERT_EQ(sa.state, sb.state);
      ASSERT_EQ(sa.reward, sb.reward);
      ASSERT_TRUE(sa.state.allFinite());
      ASSERT_TRUE(std::isfinite(sa.reward));
      ASSERT_LE(k + 1, a->max_episode_steps());
      if (sa.done) break;
    }
  }
}

TEST_P(ContractTest, RewardWeightsLeaveDynamicsUnchanged) {
  std::unique_ptr<Environment> a, b;
  switch (GetParam()) {
    case 0: {
      CartPoleSpec s;
      s.weights.alive = 0.5;
      a = std::make_unique<CartPoleEnv>();
      b = std::make_unique<CartPoleEnv>(s);
      break;
    }
    case 1: {
      LqrSpec s;
      s.weights.state_cost = 2.0;
      s.weights.action_cost = 0.0;
      a = std::make_unique<LqrEnv>();
      b = std::make_unique<LqrEnv>(s);
      break;
    }
    default: {
      ReacherSpec s;
      s.weights.state_cost = 0.5;
      s.weights.action_cost = 1.0;
      a = std::make_unique<ReacherEnv>();
      b = std::make_unique<ReacherEnv>(s);
    }
  }
  Rng ra(5), rb(5), act(6);
  const Eigen::VectorXd d = a->design_space().lower();
  a->reset(d, ra);
  b->reset(d, rb);
  bool reward_differs = false;
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(
        a->action_dim(), [&] { return uniform(act, -0.2, 0.2); });
    const auto sa = a->step(u), sb = b->step(u);
    ASSERT_EQ(sa.state, sb.state);
    ASSERT_EQ(sa.done, sb.done);
    reward_differs |= sa.reward != sb.reward;
    if (sa.done) break;
  }
  EXPECT_TRUE(reward_differs);
}

INSTANTIATE_TEST_SUITE_P(AllEnvironments, ContractTest, ::testing::Values(0, 1, 2));

}  // namespace
}  // namespace nlimb
