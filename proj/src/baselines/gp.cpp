#include "nlimb/baselines/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "nlimb/errors.hpp"

namespace nlimb {

double se_kernel(const GpHyperparameters& hyper, const Eigen::VectorXd& a,
                 const Eigen::VectorXd& b) {
  const double r2 = ((a - b).array() / hyper.length_scales.array()).square().sum();
  return hyper.signal_variance * std::exp(-0.5 * r2);
}

namespace {

bool try_factor(GpModel& m, const Eigen::MatrixXd& K, double extra) {
  Eigen::MatrixXd A = K;
  A.diagonal().array() += m.hyper.noise_variance + extra;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd y =
      (m.targets.array() - m.target_mean) / m.target_scale;
  m.chol = llt.matrixL();
  m.alpha = llt.solve(y);
  if (!m.alpha.allFinite()) return false;
  m.jitter = extra;
  const auto n = static_cast<double>(y.size());
  m.log_marginal_likelihood = -0.5 * y.dot(m.alpha) -
                              m.chol.diagonal().array().log().sum() -
                              0.5 * n * std::log(2.0 * std::numbers::pi);
  return true;
}

}  // namespace

GpModel gp_fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
               const GpHyperparameters& hyper) {
  const auto n = inputs.cols();
  if (n < 1) throw ContractError("gp_fit: need at least one observation");
  if (targets.size() != n) throw ShapeError("gp_fit: inputs and targets differ");
  if (hyper.length_scales.size() != inputs.rows())
    throw ShapeError("gp_fit: one length scale per input dimension required");

  GpModel m;
  m.inputs = inputs;
  m.targets = targets;
  m.hyper = hyper;
  m.target_mean = targets.mean();
  const double var = (targets.array() - m.target_mean).square().mean();
  m.target_scale = var > 1e-24 ? std::sqrt(var) : 1.0;

  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      K(i, j) = K(j, i) = se_kernel(hyper, inputs.col(i), inputs.col(j));

  if (try_factor(m, K, 0.0)) return m;
  for (double jitter = 1e-6; jitter <= 1e-2 * (1 + 1e-9); jitter *= 10.0)
    if (try_factor(m, K, jitter)) return m;
  throw NumericError("gp_fit: kernel matrix not positive definite after jitter");
}

GpModel gp_fit_auto(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                    const GpFitOptions& options) {
  const auto dim = inputs.rows();
  // Parameter vector in log space: [log sf2, log noise, log l_1 .. log l_d].
  auto unpack = [&](const Eigen::VectorXd& p) {
    GpHyperparameters h;
    h.signal_variance = std::exp(p[0]);
    h.noise_variance = std::max(options.noise_floor, std::exp(p[1]));
    h.length_scales = p.tail(dim).array().exp();
    return h;
  };
  auto score = [&](const Eigen::VectorXd& p) {
    try {
      return gp_fit(inputs, targets, unpack(p)).log_marginal_likelihood;
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const std::vector<double> signal = {std::log(0.25), 0.0, std::log(4.0)};
  const std::vector<double> noise = {std::log(options.noise_floor),
                                     std::log(1e-4), std::log(1e-2)};
  const std::vector<double> length = {std::log(0.05), std::log(0.1), std::log(0.2),
                                      std::log(0.4),  std::log(0.8), std::log(1.6)};

  struct Start {
    double value;
    Eigen::VectorXd p;
  };
  std::vector<Start> grid;
  Eigen::VectorXd p(2 + dim);
  std::vector<std::size_t> li(static_cast<std::size_t>(dim), 0);
  for (double s : signal) {
    for (double nz : noise) {
      std::fill(li.begin(), li.end(), 0);
      while (true) {
        p[0] = s;
        p[1] = nz;
        for (Eigen::Index d = 0; d < dim; ++d) p[2 + d] = length[li[d]];
        grid.push_back({score(p), p});
        Eigen::Index d = 0;
        while (d < dim && ++li[d] == length.size()) li[d++] = 0;
        if (d == dim) break;
      }
    }
  }
  std::stable_sort(grid.begin(), grid.end(),
                   [](const Start& a, const Start& b) { return a.value > b.value; });

  Start best = grid.front();
  const auto starts = std::min<std::size_t>(
      grid.size(), static_cast<std::size_t>(std::max(1, options.refine_starts)));
  for (std::size_t s = 0; s < starts; ++s) {
    Start cur = grid[s];
    for (double step = 0.5; step > 0.01; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (Eigen::Index k = 0; k < cur.p.size(); ++k) {
          for (double dir : {1.0, -1.0}) {
            Eigen::VectorXd q = cur.p;
            q[k] += dir * step;
            if (k == 1 && q[1] < std::log(options.noise_floor)) continue;
            const double v = score(q);
            if (v > cur.value + 1e-12) {
              cur = {v, q};
              improved = true;
            }
          }
        }
      }
    }
    if (cur.value > best.value) best = cur;
  }
  return gp_fit(inputs, targets, unpack(best.p));
}

GpPrediction gp_predict(const GpModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.inputs.rows())
    throw ShapeError("gp_predict: input dimension mismatch");
  const auto n = model.inputs.cols();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k[i] = se_kernel(model.hyper, x, model.inputs.col(i));
  const Eigen::VectorXd v =
      model.chol.triangularView<Eigen::Lower>().solve(k);
  GpPrediction out;
  out.mean = model.target_mean + model.target_scale * k.dot(model.alpha);
  const double latent = std::max(0.0, model.hyper.signal_variance - v.squaredNorm());
  out.variance = latent * model.target_scale * model.target_scale;
  return out;
}

double expected_improvement(const GpPrediction& prediction, double best_observed) {
  if (!(prediction.variance > 0.0)) return 0.0;
  const double sigma = std::sqrt(prediction.variance);
  const double z = (prediction.mean - best_observed) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return std::max(0.0, sigma * (z * cdf + pdf));
}

}  // namespace nlimb
