#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nlimb/env/environment.hpp"
#include "nlimb/parallel.hpp"
#include "nlimb/rl/policy.hpp"

namespace nlimb {

// Transitions from n designs, each controlled for `segment_length` steps.
// Column/entry i * segment_length + k is step k of design i.
struct RolloutBatch {
  int num_segments = 0;
  int segment_length = 0;

  Eigen::MatrixXd states;   // state_dim x N, state the action was taken in
  Eigen::MatrixXd designs;  // design_dim x N, clamped design
  Eigen::MatrixXd actions;  // action_dim x N, unclipped policy sample
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;     // critic at `states`
  Eigen::VectorXd log_probs;  // under the collecting policy
  std::vector<std::uint8_t> dones;
  std::vector<int> episode_ids;
  Eigen::VectorXd bootstrap_values;  // per segment, critic at the final state

  // Filled by compute_gae.
  Eigen::VectorXd advantages;
  Eigen::VectorXd value_targets;

  Eigen::Index size() const { return rewards.size(); }
};

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd design;
  Eigen::VectorXd action;
  double reward = 0.0;
  double value = 0.0;
  double log_prob = 0.0;
  bool done = false;
  int episode_id = 0;
};

Transition transition_at(const RolloutBatch& batch, Eigen::Index i);

// Runs every design for `horizon` steps with the policy held fixed, resetting
// on episode end. Design i uses its own environment instance and a generator
// seeded with seeds[i] for both resets and action noise.
RolloutBatch collect_rollouts(const PolicyState& policy,
                              const std::vector<Eigen::VectorXd>& designs,
                              const EnvFactory& env_factory, int horizon,
                              const std::vector<std::uint64_t>& seeds,
                              const WorkerPool& pool = WorkerPool(1));

// Generalized advantage estimation per segment. Bootstraps through the
// segment end unless the last step was terminal; never across a done flag.
// With `normalize`, advantages are rescaled to zero mean and unit variance
// after the value targets (raw advantage + value) are formed.
void compute_gae(RolloutBatch& batch, double gamma, double lambda,
                 bool normalize = true);

// Undiscounted (gamma = 1) or discounted returns of the episodes that finished
// inside a segment.
std::vector<double> completed_episode_returns(const RolloutBatch& batch,
                                              int segment, double gamma = 1.0);

// Mean completed-episode return of each segment. A segment without a finished
// episode reports the return accumulated by its unfinished one.
std::vector<double> segment_mean_returns(const RolloutBatch& batch,
                                         double gamma = 1.0);

struct EvaluationResult {
  double mean_return = 0.0;
  std::vector<double> episode_returns;
  std::vector<std::vector<double>> episode_rewards;  // only when recorded
  std::int64_t timesteps = 0;
};

// Mean undiscounted return over `episodes` episodes with deterministic (mean)
// actions. The environment generator is seeded with `seed`.
EvaluationResult evaluate_design(const PolicyState& policy,
                                 const EnvFactory& env_factory,
                                 const Eigen::VectorXd& design, int episodes,
                                 std::uint64_t seed, bool record_rewards = false);

// evaluate_design for many designs, stepped in lockstep.
std::vector<EvaluationResult> evaluate_designs(
    const PolicyState& policy, const EnvFactory& env_factory,
    const std::vector<Eigen::VectorXd>& designs, int episodes,
    const std::vector<std::uint64_t>& seeds,
    const WorkerPool& pool = WorkerPool(1));

}  // namespace nlimb
