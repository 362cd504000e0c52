#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nlimb/errors.hpp"
#include "nlimb/numerics/adam.hpp"
#include "nlimb/numerics/finite_diff.hpp"
#include "nlimb/numerics/gaussian.hpp"
#include "nlimb/numerics/mlp.hpp"
#include "nlimb/parallel.hpp"
#include "nlimb/random.hpp"

namespace nlimb {
namespace {

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return ((a - b).array().abs() / (a.array().abs() + b.array().abs()).max(1e-8)).maxCoeff();
}

// Independent reference forward pass built from the layer maps.
Eigen::MatrixXd reference_forward(const MlpParamsd& p, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = x;
  for (Eigen::Index l = 0; l < p.num_layers(); ++l) {
    Eigen::MatrixXd z(p.rows(l), a.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      for (Eigen::Index i = 0; i < p.rows(l); ++i) {
        double s = p.bias(l)[i];
        for (Eigen::Index j = 0; j < p.cols(l); ++j) s += p.weight(l)(i, j) * a(j, c);
        z(i, c) = l + 1 < p.num_layers() ? std::tanh(s) : s;
      }
    a = z;
  }
  return a;
}

TEST(MlpTest, ForwardMatchesReference) {
  Rng rng(3);
  const auto p = init_mlp<double>({{3, 5, 4, 2}}, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 6);
  const Eigen::MatrixXd expected = reference_forward(p, x);
  EXPECT_LT((mlp_predict(p, x) - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((mlp_forward(p, x).output - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MlpTest, ZeroParametersGiveZeroOutput) {
  const MlpParamsd p(MlpSpec{{4, 8, 3}});
  EXPECT_EQ(mlp_predict(p, Eigen::MatrixXd::Random(4, 5)), Eigen::MatrixXd::Zero(3, 5));
}

TEST(MlpTest, SingleSampleAndBatchAgree) {
  Rng rng(5);
  const auto p = init_mlp<double>({{2, 6, 6, 1}}, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 4);
  const auto batch = mlp_predict(p, x);
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    EXPECT_DOUBLE_EQ(mlp_predict(p, Eigen::MatrixXd(x.col(c)))(0, 0), batch(0, c));
}

TEST(MlpTest, BackwardMatchesFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> width(1, 6);
    MlpSpec spec{{width(rng), width(rng), width(rng), width(rng)}};
    auto p = init_mlp<double>(spec, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(spec.input_size(), 3);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(spec.output_size(), 3);
    const auto fwd = mlp_forward(p, x);
    const auto g = mlp_backward(p, fwd.cache, w);
    auto loss = [&](const Eigen::VectorXd& flat) {
      MlpParamsd q = p;
      q.flat() = flat;
      return (mlp_predict(q, x).array() * w.array()).sum();
    };
    const Eigen::VectorXd flat = p.flat();
    EXPECT_LT(max_relative_error(g.params, finite_diff_grad(loss, flat, 1e-5)), 1e-4);
    auto input_loss = [&](const Eigen::VectorXd& xi) {
      Eigen::MatrixXd xx = x;
      xx.col(0) = xi;
      return (mlp_predict(p, xx).array() * w.array()).sum();
    };
    const Eigen::VectorXd x0 = x.col(0);
    EXPECT_LT(max_relative_error(g.input.col(0), finite_diff_grad(input_loss, x0, 1e-5)), 1e-4);
  }
}

TEST(MlpTest, BackwardRejectsForeignCache) {
  Rng rng(1);
  const auto p = init_mlp<double>({{2, 3, 1}}, rng);
  const auto q = init_mlp<double>({{2, 4, 1}}, rng);
  const auto fwd = mlp_forward(q, Eigen::MatrixXd::Random(2, 1));
  EXPECT_THROW(mlp_backward(p, fwd.cache, Eigen::MatrixXd::Ones(1, 1)), ShapeError);
}

TEST(MlpTest, InputShapeChecked) {
  const MlpParamsd p(MlpSpec{{3, 2}});
  EXPECT_THROW(mlp_predict(p, Eigen::MatrixXd::Zero(4, 1)), ShapeError);
  EXPECT_THROW(MlpParamsd(MlpSpec{{3}}), ShapeError);
}

TEST(MlpTest, InitBoundsAndFinalScale) {
  Rng rng(2);
  const auto p = init_mlp<double>({{16, 9, 4}}, rng, 0.01);
  EXPECT_LE(p.weight(0).cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(p.weight(1).cwiseAbs().maxCoeff(), 0.01 / 3.0);
  EXPECT_EQ(p.bias(0), Eigen::VectorXd::Zero(9));
}

TEST(MlpTest, FloatInstantiation) {
  Rng rng(2);
  const auto p = init_mlp<float>({{2, 3, 1}}, rng);
  const Eigen::MatrixXf y = mlp_predict(p, Eigen::MatrixXf::Ones(2, 1));
  EXPECT_TRUE(y.allFinite());
}

TEST(FiniteDiffTest, QuadraticGradient) {
  const Eigen::VectorXd x = Eigen::Vector3d(1.0, -2.0, 0.5);
  auto f = [](const Eigen::VectorXd& v) { return v.squaredNorm() + 3.0 * v[0] * v[1]; };
  const Eigen::VectorXd g = finite_diff_grad(f, x, 1e-5);
  EXPECT_NEAR(g[0], 2.0 - 6.0, 1e-8);
  EXPECT_NEAR(g[1], -4.0 + 3.0, 1e-8);
  EXPECT_NEAR(g[2], 1.0, 1e-8);
  EXPECT_THROW(finite_diff_grad(f, x, 0.0), ContractError);
}

TEST(AdamTest, FirstStepMovesByLearningRateTimesSign) {
  AdamStated s(3);
  Eigen::VectorXd p = Eigen::Vector3d(1.0, 2.0, 3.0);
  adam_step(s, p, Eigen::Vector3d(0.5, -4.0, 1e-3), 0.1);
  // m_hat = g and v_hat = g^2 after one step, so the update is lr*g/(|g|+eps).
  EXPECT_NEAR(p[0], 0.9, 1e-7);
  EXPECT_NEAR(p[1], 2.1, 1e-7);
  EXPECT_NEAR(p[2], 3.0 - 0.1 * 1e-3 / (1e-3 + 1e-8), 1e-12);
  EXPECT_EQ(s.step, 1);
}

TEST(AdamTest, MatchesReferenceRecursion) {
  AdamStated s(1);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.0);
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 0.3 * t - 1.0;
    adam_step(s, p, Eigen::VectorXd::Constant(1, g), 0.01);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_NEAR(p[0], x, 1e-15);
}

TEST(AdamTest, ZeroGradientFromFreshStateLeavesParameters) {
  AdamStated s(4);
  Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(4, -1, 1);
  const Eigen::VectorXd before = p;
  adam_step(s, p, Eigen::VectorXd::Zero(4), 0.5);
  EXPECT_EQ(p, before);
}

TEST(AdamTest, RejectsBadGradients) {
  AdamStated s(2);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(adam_step(s, p, Eigen::Vector2d(std::nan(""), 0.0), 0.1), NumericError);
  EXPECT_THROW(adam_step(s, p, Eigen::Vector3d::Zero(), 0.1), ShapeError);
}

TEST(GaussianTest, LogProbMatchesClosedForm) {
  const Eigen::Vector2d mean(0.5, -1.0), log_std(std::log(0.3), std::log(2.0)), x(0.1, 1.0);
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double s = std::exp(log_std[i]);
    expected += -0.5 * std::pow((x[i] - mean[i]) / s, 2) - std::log(s * std::sqrt(2 * std::numbers::pi));
  }
  EXPECT_NEAR(gaussian_log_prob(mean, log_std, x), expected, 1e-14);
  Eigen::MatrixXd xs(2, 2);
  xs << x, mean;
  Eigen::MatrixXd ms(2, 2);
  ms << mean, mean;
  const auto cols = gaussian_log_prob_cols(ms, log_std, xs);
  EXPECT_NEAR(cols[0], expected, 1e-14);
  EXPECT_NEAR(cols[1], gaussian_log_prob(mean, log_std, mean), 1e-14);
}

TEST(GaussianTest, EntropyOfStandardNormal) {
  EXPECT_NEAR(gaussian_entropy(Eigen::VectorXd::Zero(1)),
              0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-14);
  const Eigen::VectorXd two = Eigen::VectorXd::Zero(2), three = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(gaussian_log_prob(two, three, two), ShapeError);
}

TEST(RandomTest, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
}

TEST(WorkerPoolTest, CoversEveryIndexOnceAndPropagatesErrors) {
  WorkerPool pool(3);
  std::vector<int> hits(10, 0);
  pool.for_chunks(10, [&](std::size_t b, std::size_t e) {
    for (auto i = b; i < e; ++i) ++hits[i];
  });
  EXPECT_EQ(hits, std::vector<int>(10, 1));
  EXPECT_THROW(pool.for_chunks(4, [](std::size_t b, std::size_t) {
                 if (b > 0) throw NumericError("boom");
               }),
               NumericError);
}

}  // namespace
}  // namespace nlimb
