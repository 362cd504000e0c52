#pragma once

#include <functional>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "nlimb/design/design_space.hpp"
#include "nlimb/random.hpp"

namespace nlimb {

// Multipliers on the reward terms. Each environment reads the subset it
// uses; none of them touch the dynamics.
struct RewardWeights {
  double alive = 0.0;        // per-step survival bonus
  double state_cost = 0.0;   // penalty on distance from the goal state
  double action_cost = 0.0;  // penalty on squared action
};

struct StepResult {
  Eigen::VectorXd state;
  double reward = 0.0;
  bool done = false;
};

// Episodic MDP whose transition dynamics depend on a design vector. State and
// action spaces are shared by every design in design_space().
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index action_dim() const = 0;
  virtual const DesignSpace& design_space() const = 0;
  virtual int max_episode_steps() const = 0;

  // Starts an episode for `design`, which must lie inside design_space().
  Eigen::VectorXd reset(const Eigen::VectorXd& design, Rng& rng);
  // Advances one step. Calling step() before reset() or after a step that
  // returned done is a ContractError.
  StepResult step(const Eigen::VectorXd& action);

  const Eigen::VectorXd& design() const { return design_; }
  int steps() const { return steps_; }

 protected:
  virtual Eigen::VectorXd do_reset(Rng& rng) = 0;
  // Returns the next observation, the reward, and whether the episode
  // terminated for a reason other than the step cap.
  virtual StepResult do_step(const Eigen::VectorXd& action) = 0;

 private:
  Eigen::VectorXd design_;
  int steps_ = 0;
  bool running_ = false;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

}  // namespace nlimb
