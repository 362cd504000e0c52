#include "nlimb/rl/training.hpp"

#include "nlimb/errors.hpp"

namespace nlimb {

const WorkerPool& TrainingSetup::workers() const {
  static const WorkerPool kSerial(1);
  return pool ? *pool : kSerial;
}

TrainingSetup make_training_setup(EnvFactory factory, PolicyInit policy_init,
                                  PpoConfig ppo, int designs_per_iteration,
                                  int horizon, int eval_episodes) {
  if (!factory) throw ContractError("make_training_setup: empty factory");
  const auto probe = factory();
  TrainingSetup s;
  s.space = probe->design_space();
  s.state_dim = probe->state_dim();
  s.action_dim = probe->action_dim();
  s.env_factory = std::move(factory);
  s.policy_init = std::move(policy_init);
  s.ppo = ppo;
  s.designs_per_iteration = designs_per_iteration;
  s.horizon = horizon;
  s.eval_episodes = eval_episodes;
  return s;
}

IterationOutput ppo_iteration(PolicyState& policy, PpoOptimizer& optimizer,
                              const TrainingSetup& setup,
                              const std::vector<Eigen::VectorXd>& designs,
                              const std::vector<std::uint64_t>& rollout_seeds,
                              std::uint64_t update_seed) {
  IterationOutput out;
  out.batch = collect_rollouts(policy, designs, setup.env_factory, setup.horizon,
                               rollout_seeds, setup.workers());
  compute_gae(out.batch, setup.ppo.gamma, setup.ppo.gae_lambda);
  Rng rng(update_seed);
  out.stats = ppo_update(policy, optimizer, out.batch, setup.ppo, rng);
  return out;
}

}  // namespace nlimb
