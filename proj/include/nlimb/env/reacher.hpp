#pragma once

#include <Eigen/Core>

#include "nlimb/env/environment.hpp"

namespace nlimb {

// Velocity-controlled planar two-link arm with design = [l1, l2]. Targets are
// drawn uniformly (by area) on an annulus around the base, so short designs
// cannot reach the outer ring and very unequal links cannot reach the inner.
//
// Observation: [cos q1, sin q1, cos q2, sin q2, dx, dy] where (dx, dy) is the
// target minus the end-effector position.
struct ReacherSpec {
  double dt = 0.05;
  int max_steps = 100;
  double max_joint_speed = 2.0;
  double target_inner = 0.5;
  double target_outer = 1.5;
  DesignSpace space{{{"l1", 0.2, 1.2}, {"l2", 0.2, 1.2}}};
  RewardWeights weights{.alive = 0.0, .state_cost = 1.0, .action_cost = 0.01};
  Eigen::VectorXd default_design = Eigen::Vector2d(0.6, 0.6);
};

Eigen::Vector2d reacher_end_effector(const Eigen::Vector2d& design,
                                     const Eigen::Vector2d& joints);

struct ReacherTransition {
  Eigen::Vector2d joints;
  Eigen::Vector2d end_effector;
  double reward = 0.0;
};

ReacherTransition reacher_step(const ReacherSpec& spec,
                               const Eigen::Vector2d& joints,
                               const Eigen::Vector2d& target,
                               const Eigen::Vector2d& action,
                               const Eigen::Vector2d& design);

// Whether every target on the annulus is reachable by the design.
bool reacher_covers_annulus(const ReacherSpec& spec, const Eigen::Vector2d& design);

class ReacherEnv final : public Environment {
 public:
  explicit ReacherEnv(ReacherSpec spec = {}) : spec_(std::move(spec)) {}

  std::string name() const override { return "reacher"; }
  Eigen::Index state_dim() const override { return 6; }
  Eigen::Index action_dim() const override { return 2; }
  const DesignSpace& design_space() const override { return spec_.space; }
  int max_episode_steps() const override { return spec_.max_steps; }

  const Eigen::Vector2d& joints() const { return joints_; }
  const Eigen::Vector2d& target() const { return target_; }

 protected:
  Eigen::VectorXd do_reset(Rng& rng) override;
  StepResult do_step(const Eigen::VectorXd& action) override;

 private:
  Eigen::VectorXd observe() const;

  ReacherSpec spec_;
  Eigen::Vector2d joints_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d target_ = Eigen::Vector2d::Zero();
};

}  // namespace nlimb
