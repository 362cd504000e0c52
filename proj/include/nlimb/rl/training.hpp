#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nlimb/env/environment.hpp"
#include "nlimb/parallel.hpp"
#include "nlimb/rl/policy.hpp"
#include "nlimb/rl/ppo.hpp"
#include "nlimb/rl/rollout.hpp"

namespace nlimb {

// Everything needed to run PPO on an environment family.
struct TrainingSetup {
  EnvFactory env_factory;
  DesignSpace space;
  Eigen::Index state_dim = 0;
  Eigen::Index action_dim = 0;
  PolicyInit policy_init;
  PpoConfig ppo;
  int designs_per_iteration = 8;  // parallel environment instances
  int horizon = 1024;             // steps per instance per iteration
  int eval_episodes = 100;
  const WorkerPool* pool = nullptr;

  std::int64_t timesteps_per_iteration() const {
    return static_cast<std::int64_t>(designs_per_iteration) * horizon;
  }
  const WorkerPool& workers() const;
};

// Builds a setup whose dimensions come from one instance of the factory.
TrainingSetup make_training_setup(EnvFactory factory, PolicyInit policy_init,
                                  PpoConfig ppo, int designs_per_iteration,
                                  int horizon, int eval_episodes);

struct IterationOutput {
  RolloutBatch batch;
  PpoStats stats;
};

// One collect / advantage / update cycle on the given designs.
IterationOutput ppo_iteration(PolicyState& policy, PpoOptimizer& optimizer,
                              const TrainingSetup& setup,
                              const std::vector<Eigen::VectorXd>& designs,
                              const std::vector<std::uint64_t>& rollout_seeds,
                              std::uint64_t update_seed);

}  // namespace nlimb
