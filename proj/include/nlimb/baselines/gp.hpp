#pragma once

// Gaussian-process regression with a squared-exponential ARD kernel, used as
// the surrogate for Bayesian optimization over designs. Inputs are expected
// in the unit box; targets are standardized internally.

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace nlimb {

struct GpHyperparameters {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;  // one per input dimension
  double noise_variance = 1e-6;   // in standardized target units
};

struct GpModel {
  Eigen::MatrixXd inputs;  // dim x n
  Eigen::VectorXd targets;  // raw
  double target_mean = 0.0;
  double target_scale = 1.0;
  GpHyperparameters hyper;
  double jitter = 0.0;       // added to the diagonal beyond noise_variance
  Eigen::MatrixXd chol;      // lower Cholesky factor of K + (noise + jitter) I
  Eigen::VectorXd alpha;     // (K + ...)^-1 standardized targets
  double log_marginal_likelihood = 0.0;
};

double se_kernel(const GpHyperparameters& hyper, const Eigen::VectorXd& a,
                 const Eigen::VectorXd& b);

// Exact GP with fixed hyperparameters. If the factorization fails, jitter is
// escalated from 1e-6 by factors of 10 up to 1e-2 before giving up with a
// NumericError.
GpModel gp_fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
               const GpHyperparameters& hyper);

struct GpFitOptions {
  double noise_floor = 1e-6;
  int refine_starts = 3;
};

// Chooses hyperparameters by maximizing the log marginal likelihood: a
// log-spaced grid, then compass search from the best grid points.
GpModel gp_fit_auto(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                    const GpFitOptions& options = {});

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // latent function variance, raw target units
};

GpPrediction gp_predict(const GpModel& model, const Eigen::VectorXd& x);

// Expected improvement over `best_observed` for maximization; zero when the
// predictive variance is zero.
double expected_improvement(const GpPrediction& prediction, double best_observed);

inline double expected_improvement(const GpModel& model, const Eigen::VectorXd& x,
                                   double best_observed) {
  return expected_improvement(gp_predict(model, x), best_observed);
}

}  // namespace nlimb
