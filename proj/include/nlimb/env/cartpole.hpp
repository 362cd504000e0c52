#pragma once

#include <numbers>

#include <Eigen/Core>

#include "nlimb/env/environment.hpp"

namespace nlimb {

// Cart-pole with design = [pole_length, pole_mass]. pole_length is the
// pivot-to-centre-of-mass distance of the classic equations of motion.
// The action is a normalized force in [-1, 1], scaled by force_mag.
struct CartPoleSpec {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double force_mag = 10.0;
  double dt = 0.02;
  double theta_limit = 12.0 * std::numbers::pi / 180.0;
  double x_limit = 2.4;
  int max_steps = 500;
  DesignSpace space{{{"pole_length", 0.25, 2.0}, {"pole_mass", 0.05, 1.0}}};
  RewardWeights weights{.alive = 1.0, .state_cost = 0.0, .action_cost = 0.0};
  Eigen::VectorXd default_design = Eigen::Vector2d(0.5, 0.1);
};

struct CartPoleTransition {
  Eigen::Vector4d state;
  double reward = 0.0;
  bool terminated = false;  // pole fell or cart left the track
};

// One semi-implicit Euler step from state [x, x_dot, theta, theta_dot].
CartPoleTransition cartpole_step(const CartPoleSpec& spec,
                                 const Eigen::Vector4d& state, double action,
                                 const Eigen::Vector2d& design);

class CartPoleEnv final : public Environment {
 public:
  explicit CartPoleEnv(CartPoleSpec spec = {}) : spec_(std::move(spec)) {}

  std::string name() const override { return "cartpole"; }
  Eigen::Index state_dim() const override { return 4; }
  Eigen::Index action_dim() const override { return 1; }
  const DesignSpace& design_space() const override { return spec_.space; }
  int max_episode_steps() const override { return spec_.max_steps; }

  const Eigen::Vector4d& physical_state() const { return state_; }

 protected:
  Eigen::VectorXd do_reset(Rng& rng) override;
  StepResult do_step(const Eigen::VectorXd& action) override;

 private:
  CartPoleSpec spec_;
  Eigen::Vector4d state_ = Eigen::Vector4d::Zero();
};

}  // namespace nlimb
