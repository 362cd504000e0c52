#include "nlimb/rl/policy.hpp"

#include "nlimb/errors.hpp"
#include "nlimb/numerics/gaussian.hpp"

namespace nlimb {

void PolicyState::validate() const {
  if (design_lower.size() != design_upper.size())
    throw ShapeError("policy design bounds disagree");
  if (actor.spec().output_size() != log_std.size())
    throw ShapeError("actor output size differs from log_std length");
  if (critic.spec().output_size() != 1)
    throw ShapeError("critic must have a scalar output");
  if (critic.spec().input_size() != actor.spec().input_size())
    throw ShapeError("actor and critic inputs differ");
  if (actor.spec().input_size() <= design_dim())
    throw ShapeError("policy input smaller than the design vector");
}

PolicyState init_policy(Eigen::Index state_dim, const DesignSpace& space,
                        Eigen::Index action_dim, const PolicyInit& init,
                        Rng& rng) {
  MlpSpec actor_spec;
  actor_spec.layer_sizes.push_back(state_dim + space.dimension());
  for (auto h : init.hidden) actor_spec.layer_sizes.push_back(h);
  MlpSpec critic_spec = actor_spec;
  actor_spec.layer_sizes.push_back(action_dim);
  critic_spec.layer_sizes.push_back(1);

  PolicyState p;
  p.actor = init_mlp<double>(actor_spec, rng, init.actor_output_scale);
  p.critic = init_mlp<double>(critic_spec, rng, 1.0);
  p.log_std = Eigen::VectorXd::Constant(action_dim, init.init_log_std);
  p.design_lower = space.lower();
  p.design_upper = space.upper();
  p.validate();
  return p;
}

Eigen::MatrixXd policy_inputs(const PolicyState& policy,
                              const Eigen::MatrixXd& states,
                              const Eigen::MatrixXd& designs) {
  if (states.rows() != policy.state_dim() ||
      designs.rows() != policy.design_dim() || states.cols() != designs.cols())
    throw ShapeError("policy_inputs: state/design shape mismatch");
  Eigen::MatrixXd in(states.rows() + designs.rows(), states.cols());
  in.topRows(states.rows()) = states;
  const Eigen::ArrayXd lo = policy.design_lower.array();
  const Eigen::ArrayXd scale = 2.0 / (policy.design_upper - policy.design_lower).array();
  in.bottomRows(designs.rows()) =
      ((designs.array().colwise() - lo).colwise() * scale - 1.0).matrix();
  return in;
}

PolicyAction policy_act(const PolicyState& policy, const Eigen::VectorXd& state,
                        const Eigen::VectorXd& design, Rng& rng) {
  const Eigen::MatrixXd in = policy_inputs(policy, state, design);
  PolicyAction out;
  out.mean = mlp_predict(policy.actor, in);
  out.action = out.mean + (policy.log_std.array().exp() *
                           standard_normal_vector(rng, policy.action_dim()).array())
                              .matrix();
  out.log_prob = gaussian_log_prob(out.mean, policy.log_std, out.action);
  out.value = mlp_predict(policy.critic, in)(0, 0);
  return out;
}

Eigen::MatrixXd policy_mean(const PolicyState& policy,
                            const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& designs) {
  return mlp_predict(policy.actor, policy_inputs(policy, states, designs));
}

Eigen::VectorXd policy_value(const PolicyState& policy,
                             const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& designs) {
  return mlp_predict(policy.critic, policy_inputs(policy, states, designs))
      .row(0)
      .transpose();
}

}  // namespace nlimb
