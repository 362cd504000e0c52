#include "nlimb/env/environment.hpp"

#include "nlimb/errors.hpp"

namespace nlimb {

Eigen::VectorXd Environment::reset(const Eigen::VectorXd& design, Rng& rng) {
  if (design.size() != design_space().dimension())
    throw ShapeError(name() + ": design has wrong dimension");
  if (!design_space().contains(design))
    throw ContractError(name() + ": design outside its bounds");
  design_ = design;
  steps_ = 0;
  running_ = true;
  return do_reset(rng);
}

StepResult Environment::step(const Eigen::VectorXd& action) {
  if (!running_) throw ContractError(name() + ": step() without a live episode");
  if (action.size() != action_dim())
    throw ShapeError(name() + ": action has wrong dimension");
  if (!action.allFinite()) throw NumericError(name() + ": non-finite action");
  StepResult r = do_step(action);
  ++steps_;
  if (steps_ >= max_episode_steps()) r.done = true;
  if (r.done) running_ = false;
  return r;
}

}  // namespace nlimb
