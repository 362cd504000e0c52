#pragma once

// Design-conditioned Gaussian policy and value function. Both networks read
// the environment state concatenated with the design vector, the latter
// affinely mapped from its box onto [-1, 1].

#include <vector>

#include <Eigen/Core>

#include "nlimb/design/design_space.hpp"
#include "nlimb/numerics/mlp.hpp"
#include "nlimb/random.hpp"

namespace nlimb {

struct PolicyState {
  MlpParamsd actor;         // [state; design] -> action mean
  Eigen::VectorXd log_std;  // state-independent
  MlpParamsd critic;        // [state; design] -> value
  Eigen::VectorXd design_lower;
  Eigen::VectorXd design_upper;

  Eigen::Index state_dim() const {
    return actor.spec().input_size() - design_dim();
  }
  Eigen::Index design_dim() const { return design_lower.size(); }
  Eigen::Index action_dim() const { return log_std.size(); }

  void validate() const;
};

struct PolicyInit {
  std::vector<Eigen::Index> hidden = {128, 128, 128};
  double init_log_std = 0.0;
  double actor_output_scale = 0.01;
};

PolicyState init_policy(Eigen::Index state_dim, const DesignSpace& space,
                        Eigen::Index action_dim, const PolicyInit& init,
                        Rng& rng);

// Network inputs for a batch: states (state_dim x B), designs (design_dim x B).
Eigen::MatrixXd policy_inputs(const PolicyState& policy,
                              const Eigen::MatrixXd& states,
                              const Eigen::MatrixXd& designs);

struct PolicyAction {
  Eigen::VectorXd action;
  Eigen::VectorXd mean;
  double log_prob = 0.0;
  double value = 0.0;
};

// Samples a ~ N(mean, exp(log_std)^2) for one state.
PolicyAction policy_act(const PolicyState& policy, const Eigen::VectorXd& state,
                        const Eigen::VectorXd& design, Rng& rng);

// Action means for a batch, without sampling.
Eigen::MatrixXd policy_mean(const PolicyState& policy,
                            const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& designs);

// Critic values for a batch.
Eigen::VectorXd policy_value(const PolicyState& policy,
                             const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& designs);

}  // namespace nlimb
