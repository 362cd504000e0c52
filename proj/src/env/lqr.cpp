#include "nlimb/env/lqr.hpp"

#include <cmath>
#include <limits>

#include "nlimb/errors.hpp"

namespace nlimb {

LqrTransition lqr_step(const LqrSpec& spec, const Eigen::Vector2d& state,
                       double action, const Eigen::Vector2d& design) {
  if (!std::isfinite(action)) throw NumericError("lqr: non-finite action");
  const double x = state[0];
  const double v = state[1];
  LqrTransition t;
  t.state[0] = x + spec.dt * v;
  t.state[1] = v + spec.dt * (design[0] * action - design[1] * v);
  t.reward = -(spec.weights.state_cost * x * x +
               spec.weights.action_cost * action * action);
  return t;
}

LqrSystem lqr_system(const LqrSpec& spec, const Eigen::Vector2d& design) {
  LqrSystem s;
  s.A << 1.0, spec.dt, 0.0, 1.0 - spec.dt * design[1];
  s.B << 0.0, spec.dt * design[0];
  return s;
}

namespace {

// Backward sweep; calls visit(k, K_k) for k = H-1 .. 0 and returns P_0.
template <typename Visit>
Eigen::Matrix2d riccati_sweep(const LqrSpec& spec, const Eigen::Vector2d& design,
                              Visit&& visit) {
  const auto sys = lqr_system(spec, design);
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Q(0, 0) = spec.weights.state_cost;
  const double R = spec.weights.action_cost;
  if (!(R > 0.0)) throw ContractError("lqr oracle needs a positive action cost");
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  for (int k = spec.max_steps - 1; k >= 0; --k) {
    const double M = R + sys.B.dot(P * sys.B);
    const Eigen::RowVector2d K = (sys.B.transpose() * P * sys.A) / M;
    P = Q + sys.A.transpose() * P * sys.A -
        sys.A.transpose() * P * sys.B * K;
    P = 0.5 * (P + P.transpose()).eval();
    visit(k, K);
  }
  return P;
}

}  // namespace

Eigen::Matrix2d lqr_cost_to_go(const LqrSpec& spec,
                               const Eigen::Vector2d& design) {
  return riccati_sweep(spec, design, [](int, const Eigen::RowVector2d&) {});
}

std::vector<Eigen::RowVector2d> lqr_feedback_gains(
    const LqrSpec& spec, const Eigen::Vector2d& design) {
  std::vector<Eigen::RowVector2d> gains(static_cast<std::size_t>(spec.max_steps));
  riccati_sweep(spec, design, [&](int k, const Eigen::RowVector2d& K) {
    gains[static_cast<std::size_t>(k)] = K;
  });
  return gains;
}

double lqr_optimal_return(const LqrSpec& spec, const Eigen::Vector2d& design) {
  const double second_moment = spec.reset_range * spec.reset_range / 3.0;
  return -lqr_cost_to_go(spec, design)(0, 0) * second_moment;
}

namespace {

Eigen::VectorXd grid(double lo, double hi, int n) {
  if (n == 1) return Eigen::VectorXd::Constant(1, 0.5 * (lo + hi));
  return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

}  // namespace

LqrOracleResult lqr_design_oracle(const LqrSpec& spec, int grid_points) {
  if (grid_points < 1) throw ContractError("lqr_design_oracle: grid_points < 1");
  LqrOracleResult r;
  r.gain_grid = grid(spec.space.lower()[0], spec.space.upper()[0], grid_points);
  r.damping_grid = grid(spec.space.lower()[1], spec.space.upper()[1], grid_points);
  r.expected_return.resize(grid_points, grid_points);
  r.best_return = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    for (int j = 0; j < grid_points; ++j) {
      const Eigen::Vector2d d(r.gain_grid[i], r.damping_grid[j]);
      const double value = lqr_optimal_return(spec, d);
      r.expected_return(i, j) = value;
      if (value > r.best_return) {
        r.best_return = value;
        r.best_design = d;
      }
    }
  }
  return r;
}

Eigen::VectorXd LqrEnv::do_reset(Rng& rng) {
  state_ << uniform(rng, -spec_.reset_range, spec_.reset_range), 0.0;
  return state_;
}

StepResult LqrEnv::do_step(const Eigen::VectorXd& action) {
  const auto t = lqr_step(spec_, state_, action[0], design());
  state_ = t.state;
  return {state_, t.reward, false};
}

}  // namespace nlimb
