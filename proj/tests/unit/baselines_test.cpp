#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nlimb/baselines/gp.hpp"
#include "nlimb/baselines/search.hpp"
#include "nlimb/env/lqr.hpp"
#include "nlimb/errors.hpp"

namespace nlimb {
namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

DesignSpace unit_square() { return DesignSpace{{{"a", 0.0, 1.0}, {"b", 0.0, 1.0}}}; }

CandidateEvaluator quadratic(const Eigen::Vector2d& c, std::int64_t cost, int* calls = nullptr) {
  return [=](const Eigen::VectorXd& w, int) {
    if (calls) ++*calls;
    CandidateOutcome o;
    o.score = -(w - c).squaredNorm();
    o.cost = cost;
    o.eval_cost = 7;
    return o;
  };
}

TEST(GpTest, KernelClosedForm) {
  GpHyperparameters h;
  h.signal_variance = 2.0;
  h.length_scales = Eigen::Vector2d(0.5, 2.0);
  const Eigen::Vector2d a(0.1, 0.3), b(0.4, -0.5);
  const double r2 = std::pow(0.3 / 0.5, 2) + std::pow(0.8 / 2.0, 2);
  EXPECT_NEAR(se_kernel(h, a, b), 2.0 * std::exp(-0.5 * r2), 1e-15);
}

TEST(GpTest, InterpolatesNoiseFreeData) {
  Rng rng(4);
  Eigen::MatrixXd x(2, 12);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    x.col(i) = Eigen::Vector2d(uniform(rng, 0, 1), uniform(rng, 0, 1));
    y[i] = std::sin(3 * x(0, i)) + x(1, i) * x(1, i);
  }
  GpHyperparameters h;
  h.length_scales = Eigen::Vector2d(0.3, 0.3);
  h.noise_variance = 1e-10;
  const auto m = gp_fit(x, y, h);
  for (int i = 0; i < 12; ++i) {
    const auto p = gp_predict(m, x.col(i));
    EXPECT_NEAR(p.mean, y[i], 1e-6);
    EXPECT_LT(p.variance, 1e-6);
  }
  const auto fitted = gp_fit_auto(x, y, GpFitOptions{.noise_floor = 1e-10});
  // Evidence maximisation may settle on a small nonzero noise.
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(gp_predict(fitted, x.col(i)).mean, y[i], 1e-3);
}

TEST(GpTest, PosteriorRevertsToPriorFarAway) {
  Eigen::MatrixXd x(1, 2);
  x << 0.0, 0.1;
  GpHyperparameters h;
  h.length_scales = Eigen::VectorXd::Constant(1, 0.1);
  const auto m = gp_fit(x, Eigen::Vector2d(3.0, 5.0), h);
  const auto p = gp_predict(m, Eigen::VectorXd::Constant(1, 100.0));
  EXPECT_NEAR(p.mean, m.target_mean, 1e-9);
  EXPECT_NEAR(p.variance, h.signal_variance * m.target_scale * m.target_scale, 1e-9);
}

TEST(GpTest, ShapeChecks) {
  GpHyperparameters h;
  h.length_scales = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(gp_fit(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2), h), ShapeError);
  EXPECT_THROW(gp_fit(Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3), h), ShapeError);
  EXPECT_THROW(gp_fit(Eigen::MatrixXd::Zero(2, 0), Eigen::VectorXd::Zero(0), h), ContractError);
}

TEST(ExpectedImprovementTest, AnalyticSpotChecks) {
  // z = 0: EI = sigma * phi(0).
  EXPECT_NEAR(expected_improvement(GpPrediction{1.0, 1.0}, 1.0), 0.398942, 1e-6);
  EXPECT_NEAR(expected_improvement(GpPrediction{2.0, 4.0}, 2.0), 2.0 * normal_pdf(0.0), 1e-12);
  const double mu = 0.3, sigma = 0.7, best = 0.1, z = (mu - best) / sigma;
  EXPECT_NEAR(expected_improvement(GpPrediction{mu, sigma * sigma}, best),
              (mu - best) * normal_cdf(z) + sigma * normal_pdf(z), 1e-12);
  EXPECT_EQ(expected_improvement(GpPrediction{0.5, 0.0}, 1.0), 0.0);
  EXPECT_EQ(expected_improvement(GpPrediction{1.5, 0.0}, 1.0), 0.0);
  double prev = 0.0;
  for (double m = -3.0; m <= 3.0; m += 0.25) {
    const double ei = expected_improvement(GpPrediction{m, 0.5}, 0.0);
    EXPECT_GE(ei, 0.0);
    EXPECT_GE(ei, prev);
    prev = ei;
  }
}

TEST(BudgetLedgerTest, EnforcesAllowance) {
  BudgetLedger l(100);
  l.charge(60);
  EXPECT_TRUE(l.can_afford(40));
  EXPECT_FALSE(l.can_afford(41));
  EXPECT_THROW(l.charge(41), ContractError);
  EXPECT_THROW(l.charge(-1), ContractError);
  l.charge(40);
  EXPECT_EQ(l.remaining(), 0);
  EXPECT_EQ(l.per_candidate(), (std::vector<std::int64_t>{60, 40}));
}

TEST(RandomSearchTest, RespectsBudgetAndIsReproducible) {
  int calls = 0;
  const auto a = random_search(unit_square(), quadratic({0.5, 0.5}, 10, &calls), 10, 95, 3);
  EXPECT_EQ(calls, 9);
  EXPECT_EQ(a.candidates.size(), 9u);
  EXPECT_EQ(a.ledger.consumed(), 90);
  EXPECT_EQ(a.eval_timesteps, 63);
  const auto b = random_search(unit_square(), quadratic({0.5, 0.5}, 10), 10, 95, 3);
  for (std::size_t i = 0; i < a.candidates.size(); ++i)
    EXPECT_EQ(a.candidates[i].design, b.candidates[i].design);
  double best = -1e9;
  for (const auto& c : a.candidates) {
    EXPECT_TRUE(unit_square().contains(c.design));
    best = std::max(best, c.score);
  }
  EXPECT_EQ(a.best_return, best);
  EXPECT_THROW(random_search(unit_square(), quadratic({0, 0}, 1), 10, 5, 1), ConfigError);
}

TEST(BayesOptTest, MinimalBudgetUsesInitialDesignsOnly) {
  const auto r = bayesopt_search(unit_square(), quadratic({0.2, 0.8}, 5), 5, 10, 1);
  EXPECT_EQ(r.candidates.size(), 2u);
  EXPECT_THROW(bayesopt_search(unit_square(), quadratic({0.2, 0.8}, 5), 5, 9, 1), ConfigError);
}

TEST(BayesOptTest, FindsQuadraticOptimumInTenEvaluations) {
  const Eigen::Vector2d c(0.3, 0.7);
  std::vector<double> err0, err1;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = bayesopt_search(unit_square(), quadratic(c, 1), 1, 10, seed);
    EXPECT_EQ(r.candidates.size(), 10u);
    err0.push_back(std::abs(r.best_design[0] - c[0]));
    err1.push_back(std::abs(r.best_design[1] - c[1]));
  }
  std::nth_element(err0.begin(), err0.begin() + 2, err0.end());
  std::nth_element(err1.begin(), err1.begin() + 2, err1.end());
  EXPECT_LT(err0[2], 0.1);
  EXPECT_LT(err1[2], 0.1);
  const auto a = bayesopt_search(unit_square(), quadratic(c, 1), 1, 10, 9);
  const auto b = bayesopt_search(unit_square(), quadratic(c, 1), 1, 10, 9);
  EXPECT_EQ(a.best_design, b.best_design);
}

TEST(FixedDesignTest, BudgetAndBoundsChecked) {
  PolicyInit init;
  init.hidden = {8};
  const auto setup = make_training_setup(
      [] { return std::unique_ptr<Environment>(new LqrEnv()); }, init, PpoConfig{}, 2, 50, 2);
  EXPECT_THROW(train_fixed_design(Eigen::Vector2d(1.0, 0.5), setup, 99, 1), ConfigError);
  EXPECT_THROW(train_fixed_design(Eigen::Vector2d(5.0, 0.5), setup, 1000, 1), ContractError);
  const auto r = train_fixed_design(Eigen::Vector2d(1.0, 0.5), setup, 250, 1);
  EXPECT_EQ(r.timesteps, 200);
  EXPECT_EQ(r.eval_timesteps, 400);
  EXPECT_TRUE(std::isfinite(r.mean_return));
  const auto again = train_fixed_design(Eigen::Vector2d(1.0, 0.5), setup, 250, 1);
  EXPECT_EQ(again.mean_return, r.mean_return);
}

}  // namespace
}  // namespace nlimb
