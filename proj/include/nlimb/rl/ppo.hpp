#pragma once

// Clipped-surrogate policy optimization over a RolloutBatch.

#include <vector>

#include <Eigen/Core>

#include "nlimb/numerics/adam.hpp"
#include "nlimb/random.hpp"
#include "nlimb/rl/policy.hpp"
#include "nlimb/rl/rollout.hpp"

namespace nlimb {

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch_size = 256;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;

  void validate() const;
};

// Adam moments for the actor (network parameters followed by log_std) and
// the critic.
struct PpoOptimizer {
  AdamStated actor;
  AdamStated critic;
};

PpoOptimizer make_ppo_optimizer(const PolicyState& policy);

struct SurrogateTerm {
  double value = 0.0;
  double d_log_prob = 0.0;  // derivative w.r.t. the new log-probability
};

// min(r A, clip(r, 1 - eps, 1 + eps) A) for one sample, with its derivative
// through r = exp(log_prob - old_log_prob).
SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip);

enum class PolicyObjective {
  kClipped,  // mean clipped surrogate
  kVanilla,  // mean log_prob * advantage
};

struct ActorObjective {
  double value = 0.0;         // objective being ascended, entropy included
  double surrogate = 0.0;     // objective without the entropy bonus
  double entropy = 0.0;
  double approx_kl = 0.0;     // mean(old_log_prob - new_log_prob)
  double clip_fraction = 0.0;
  Eigen::VectorXd gradient;   // ascent direction: [actor params; log_std]
};

// Objective and gradient over the batch columns in `indices` (all columns
// when empty).
ActorObjective actor_objective(const PolicyState& policy,
                               const RolloutBatch& batch,
                               const std::vector<Eigen::Index>& indices,
                               PolicyObjective kind, double clip,
                               double entropy_coef);

struct CriticLoss {
  double value = 0.0;  // value_coef * 0.5 * mean (V - target)^2
  Eigen::VectorXd gradient;
};

CriticLoss critic_loss(const PolicyState& policy, const RolloutBatch& batch,
                       const std::vector<Eigen::Index>& indices,
                       double value_coef);

struct PpoStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int updates = 0;
};

// Epochs of shuffled minibatch updates. Advantages and value targets must
// already be in the batch (compute_gae). Throws NumericError on a non-finite
// loss, leaving `policy` at its last finite state.
PpoStats ppo_update(PolicyState& policy, PpoOptimizer& optimizer,
                    const RolloutBatch& batch, const PpoConfig& config, Rng& rng);

}  // namespace nlimb
