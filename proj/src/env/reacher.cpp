#include "nlimb/env/reacher.hpp"

#include <cmath>
#include <numbers>

#include "nlimb/errors.hpp"

namespace nlimb {

Eigen::Vector2d reacher_end_effector(const Eigen::Vector2d& design,
                                     const Eigen::Vector2d& joints) {
  const double a = joints[0];
  const double b = joints[0] + joints[1];
  return {design[0] * std::cos(a) + design[1] * std::cos(b),
          design[0] * std::sin(a) + design[1] * std::sin(b)};
}

ReacherTransition reacher_step(const ReacherSpec& spec,
                               const Eigen::Vector2d& joints,
                               const Eigen::Vector2d& target,
                               const Eigen::Vector2d& action,
                               const Eigen::Vector2d& design) {
  if (!action.allFinite()) throw NumericError("reacher: non-finite action");
  const Eigen::Vector2d speed =
      action.cwiseMax(-spec.max_joint_speed).cwiseMin(spec.max_joint_speed);
  ReacherTransition t;
  t.joints = joints + spec.dt * speed;
  // Keep angles in (-pi, pi].
  for (int i = 0; i < 2; ++i)
    t.joints[i] = std::remainder(t.joints[i], 2.0 * std::numbers::pi);
  t.end_effector = reacher_end_effector(design, t.joints);
  t.reward = -spec.weights.state_cost * (t.end_effector - target).norm() -
             spec.weights.action_cost * speed.squaredNorm();
  return t;
}

bool reacher_covers_annulus(const ReacherSpec& spec,
                            const Eigen::Vector2d& design) {
  return design[0] + design[1] >= spec.target_outer &&
         std::abs(design[0] - design[1]) <= spec.target_inner;
}

Eigen::VectorXd ReacherEnv::do_reset(Rng& rng) {
  constexpr double pi = std::numbers::pi;
  joints_ << uniform(rng, -pi, pi), uniform(rng, -pi, pi);
  const double angle = uniform(rng, -pi, pi);
  const double r2 = uniform(rng, spec_.target_inner * spec_.target_inner,
                            spec_.target_outer * spec_.target_outer);
  const double radius = std::sqrt(r2);
  target_ << radius * std::cos(angle), radius * std::sin(angle);
  return observe();
}

StepResult ReacherEnv::do_step(const Eigen::VectorXd& action) {
  const auto t = reacher_step(spec_, joints_, target_, action, design());
  joints_ = t.joints;
  return {observe(), t.reward, false};
}

Eigen::VectorXd ReacherEnv::observe() const {
  Eigen::VectorXd obs(6);
  const Eigen::Vector2d delta = target_ - reacher_end_effector(design(), joints_);
  obs << std::cos(joints_[0]), std::sin(joints_[0]), std::cos(joints_[1]),
      std::sin(joints_[1]), delta[0], delta[1];
  return obs;
}

}  // namespace nlimb
