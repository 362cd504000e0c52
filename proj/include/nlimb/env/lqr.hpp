#pragma once

#include <vector>

#include <Eigen/Core>

#include "nlimb/env/environment.hpp"

namespace nlimb {

// Damped double integrator with design = [gain, damping]:
//   x' = x + dt v,  v' = v + dt (gain a - damping v)
//   r  = -(state_cost x^2 + action_cost a^2)
// Episodes always run max_steps; reset draws x ~ U[-reset_range, reset_range]
// with v = 0. Its optimal controller is known exactly, which makes it the
// ground-truth task for design search.
struct LqrSpec {
  double dt = 0.05;
  int max_steps = 200;
  double reset_range = 1.0;
  DesignSpace space{{{"gain", 0.2, 2.0}, {"damping", 0.05, 1.0}}};
  RewardWeights weights{.alive = 0.0, .state_cost = 1.0, .action_cost = 0.1};
  Eigen::VectorXd default_design = Eigen::Vector2d(1.0, 0.5);
};

struct LqrTransition {
  Eigen::Vector2d state;
  double reward = 0.0;
};

LqrTransition lqr_step(const LqrSpec& spec, const Eigen::Vector2d& state,
                       double action, const Eigen::Vector2d& design);

// Linear dynamics x' = A x + B a for a design.
struct LqrSystem {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
};
LqrSystem lqr_system(const LqrSpec& spec, const Eigen::Vector2d& design);

// Cost-to-go matrix P_0 of the finite-horizon problem with zero terminal
// cost, from the backward Riccati sweep over max_steps stages.
Eigen::Matrix2d lqr_cost_to_go(const LqrSpec& spec, const Eigen::Vector2d& design);

// Time-varying optimal feedback gains K_k (a_k = -K_k x_k), k = 0..H-1.
std::vector<Eigen::RowVector2d> lqr_feedback_gains(const LqrSpec& spec,
                                                   const Eigen::Vector2d& design);

// Optimal expected episode return under the reset distribution.
double lqr_optimal_return(const LqrSpec& spec, const Eigen::Vector2d& design);

struct LqrOracleResult {
  Eigen::VectorXd gain_grid;
  Eigen::VectorXd damping_grid;
  Eigen::MatrixXd expected_return;  // rows: gain, cols: damping
  Eigen::Vector2d best_design;
  double best_return = 0.0;
};

// Exhaustive grid search of lqr_optimal_return. A single grid point per
// dimension evaluates the centre of the box.
LqrOracleResult lqr_design_oracle(const LqrSpec& spec, int grid_points);

class LqrEnv final : public Environment {
 public:
  explicit LqrEnv(LqrSpec spec = {}) : spec_(std::move(spec)) {}

  std::string name() const override { return "lqr"; }
  Eigen::Index state_dim() const override { return 2; }
  Eigen::Index action_dim() const override { return 1; }
  const DesignSpace& design_space() const override { return spec_.space; }
  int max_episode_steps() const override { return spec_.max_steps; }

 protected:
  Eigen::VectorXd do_reset(Rng& rng) override;
  StepResult do_step(const Eigen::VectorXd& action) override;

 private:
  LqrSpec spec_;
  Eigen::Vector2d state_ = Eigen::Vector2d::Zero();
};

}  // namespace nlimb
