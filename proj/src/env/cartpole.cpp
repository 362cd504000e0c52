#include "nlimb/env/cartpole.hpp"

#include <algorithm>
#include <cmath>

#include "nlimb/errors.hpp"

namespace nlimb {

CartPoleTransition cartpole_step(const CartPoleSpec& spec,
                                 const Eigen::Vector4d& state, double action,
                                 const Eigen::Vector2d& design) {
  if (!std::isfinite(action)) throw NumericError("cartpole: non-finite action");
  const double a = std::clamp(action, -1.0, 1.0);
  const double force = spec.force_mag * a;
  const double length = design[0];
  const double pole_mass = design[1];
  const double total_mass = spec.cart_mass + pole_mass;

  const double x_dot = state[1];
  const double theta = state[2];
  const double theta_dot = state[3];
  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);

  const double temp =
      (force + pole_mass * length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (spec.gravity * sin_t - cos_t * temp) /
      (length * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass * length * theta_acc * cos_t / total_mass;

  CartPoleTransition out;
  // Velocities first, then positions with the updated velocities.
  out.state[1] = x_dot + spec.dt * x_acc;
  out.state[0] = state[0] + spec.dt * out.state[1];
  out.state[3] = theta_dot + spec.dt * theta_acc;
  out.state[2] = theta + spec.dt * out.state[3];

  out.reward = spec.weights.alive - spec.weights.action_cost * a * a;
  out.terminated = std::abs(out.state[2]) > spec.theta_limit ||
                   std::abs(out.state[0]) > spec.x_limit;
  return out;
}

Eigen::VectorXd CartPoleEnv::do_reset(Rng& rng) {
  for (int i = 0; i < 4; ++i) state_[i] = uniform(rng, -0.05, 0.05);
  return state_;
}

StepResult CartPoleEnv::do_step(const Eigen::VectorXd& action) {
  const auto t = cartpole_step(spec_, state_, action[0], design());
  state_ = t.state;
  return {state_, t.reward, t.terminated};
}

}  // namespace nlimb
