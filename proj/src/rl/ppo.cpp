#include "nlimb/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nlimb/errors.hpp"
#include "nlimb/numerics/gaussian.hpp"

namespace nlimb {
namespace {

std::vector<Eigen::Index> all_indices(const RolloutBatch& batch,
                                      const std::vector<Eigen::Index>& indices) {
  if (!indices.empty()) return indices;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(batch.size()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return all;
}

void clip_norm(Eigen::VectorXd& g, double max_norm) {
  const double norm = g.norm();
  if (max_norm > 0.0 && norm > max_norm) g *= max_norm / norm;
}

}  // namespace

void PpoConfig::validate() const {
  auto fail = [](const char* key, const char* what) {
    throw ConfigError(what, std::string("ppo.") + key);
  };
  if (!(clip > 0.0 && clip < 1.0)) fail("clip", "must lie in (0, 1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must lie in [0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("lambda", "must lie in [0, 1]");
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (minibatch_size < 1) fail("minibatch_size", "must be >= 1");
  if (!(policy_lr >= 0.0)) fail("policy_lr", "must be >= 0");
  if (!(value_lr >= 0.0)) fail("value_lr", "must be >= 0");
  if (!std::isfinite(entropy_coef)) fail("entropy_coef", "must be finite");
  if (!(value_coef >= 0.0)) fail("value_coef", "must be >= 0");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm", "must be > 0");
}

PpoOptimizer make_ppo_optimizer(const PolicyState& policy) {
  return {AdamStated(policy.actor.size() + policy.action_dim()),
          AdamStated(policy.critic.size())};
}

SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  SurrogateTerm t;
  if (unclipped <= clipped) {
    t.value = unclipped;
    t.d_log_prob = ratio * advantage;
  } else {
    t.value = clipped;
    // The clipped branch is flat in r unless r is inside the clip range.
    const bool inside = ratio >= 1.0 - clip && ratio <= 1.0 + clip;
    t.d_log_prob = inside ? ratio * advantage : 0.0;
  }
  return t;
}

ActorObjective actor_objective(const PolicyState& policy,
                               const RolloutBatch& batch,
                               const std::vector<Eigen::Index>& indices,
                               PolicyObjective kind, double clip,
                               double entropy_coef) {
  const auto idx = all_indices(batch, indices);
  if (batch.advantages.size() != batch.size())
    throw ContractError("actor_objective: advantages not computed");
  const auto n = static_cast<Eigen::Index>(idx.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  const Eigen::MatrixXd inputs = policy_inputs(
      policy, batch.states(Eigen::all, idx), batch.designs(Eigen::all, idx));
  const auto fwd = mlp_forward(policy.actor, inputs);
  const Eigen::MatrixXd actions = batch.actions(Eigen::all, idx);
  const Eigen::VectorXd inv_std = (-policy.log_std.array()).exp();
  const Eigen::MatrixXd z = inv_std.asDiagonal() * (actions - fwd.output);
  const double norm = policy.log_std.sum() +
                      static_cast<double>(policy.action_dim()) * kHalfLog2Pi<double>;

  ActorObjective out;
  Eigen::RowVectorXd d_log_prob(n);
  int clipped = 0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index i = idx[static_cast<std::size_t>(c)];
    const double log_prob = -0.5 * z.col(c).squaredNorm() - norm;
    const double adv = batch.advantages[i];
    out.approx_kl += (batch.log_probs[i] - log_prob) * inv_n;
    if (kind == PolicyObjective::kVanilla) {
      out.surrogate += log_prob * adv * inv_n;
      d_log_prob[c] = adv * inv_n;
      continue;
    }
    const double ratio = std::exp(log_prob - batch.log_probs[i]);
    if (std::abs(ratio - 1.0) > clip) ++clipped;
    const auto term = clipped_surrogate(ratio, adv, clip);
    out.surrogate += term.value * inv_n;
    d_log_prob[c] = term.d_log_prob * inv_n;
  }
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.entropy = gaussian_entropy(policy.log_std);
  out.value = out.surrogate + entropy_coef * out.entropy;

  // d log N(a; mu, sigma) / d mu = (a - mu) / sigma^2
  const Eigen::MatrixXd d_mean =
      (inv_std.asDiagonal() * z).array().rowwise() * d_log_prob.array();
  const auto back = mlp_backward(policy.actor, fwd.cache, d_mean);
  // d log N / d log_sigma = z^2 - 1
  const Eigen::VectorXd d_log_std =
      ((z.array().square() - 1.0).rowwise() * d_log_prob.array()).rowwise().sum().matrix() +
      Eigen::VectorXd::Constant(policy.action_dim(), entropy_coef);

  out.gradient.resize(policy.actor.size() + policy.action_dim());
  out.gradient << back.params, d_log_std;
  return out;
}

CriticLoss critic_loss(const PolicyState& policy, const RolloutBatch& batch,
                       const std::vector<Eigen::Index>& indices,
                       double value_coef) {
  const auto idx = all_indices(batch, indices);
  if (batch.value_targets.size() != batch.size())
    throw ContractError("critic_loss: value targets not computed");
  const auto n = static_cast<double>(idx.size());
  const Eigen::MatrixXd inputs = policy_inputs(
      policy, batch.states(Eigen::all, idx), batch.designs(Eigen::all, idx));
  const auto fwd = mlp_forward(policy.critic, inputs);
  const Eigen::RowVectorXd diff =
      fwd.output.row(0) - batch.value_targets(idx).transpose();
  CriticLoss out;
  out.value = value_coef * 0.5 * diff.squaredNorm() / n;
  out.gradient = mlp_backward(policy.critic, fwd.cache, (value_coef / n) * diff).params;
  return out;
}

PpoStats ppo_update(PolicyState& policy, PpoOptimizer& optimizer,
                    const RolloutBatch& batch, const PpoConfig& config,
                    Rng& rng) {
  config.validate();
  if (batch.advantages.size() != batch.size() ||
      batch.value_targets.size() != batch.size())
    throw ContractError("ppo_update: run compute_gae first");
  PpoStats stats;
  if (batch.size() == 0) return stats;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(batch.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto mb = static_cast<std::size_t>(config.minibatch_size);
  const Eigen::Index actor_size = policy.actor.size();
  Eigen::VectorXd actor_params(actor_size + policy.action_dim());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::vector<Eigen::Index> idx(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + mb)));

      auto actor = actor_objective(policy, batch, idx, PolicyObjective::kClipped,
                                   config.clip, config.entropy_coef);
      auto critic = critic_loss(policy, batch, idx, config.value_coef);
      if (!std::isfinite(actor.value) || !std::isfinite(critic.value) ||
          !actor.gradient.allFinite() || !critic.gradient.allFinite()) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss at epoch " << epoch
            << ", minibatch offset " << start << " (surrogate " << actor.surrogate
            << ", value loss " << critic.value << ", approx kl "
            << actor.approx_kl << ")";
        throw NumericError(msg.str());
      }

      Eigen::VectorXd descent = -actor.gradient;
      clip_norm(descent, config.max_grad_norm);
      actor_params << policy.actor.flat(), policy.log_std;
      adam_step(optimizer.actor, actor_params, descent, config.policy_lr);
      policy.actor.flat() = actor_params.head(actor_size);
      policy.log_std = actor_params.tail(policy.action_dim());

      clip_norm(critic.gradient, config.max_grad_norm);
      adam_step(optimizer.critic, policy.critic.flat(), critic.gradient,
                config.value_lr);

      stats.surrogate += actor.surrogate;
      stats.value_loss += critic.value;
      stats.entropy += actor.entropy;
      stats.approx_kl += actor.approx_kl;
      stats.clip_fraction += actor.clip_fraction;
      ++stats.updates;
    }
  }
  const double k = 1.0 / stats.updates;
  stats.surrogate *= k;
  stats.value_loss *= k;
  stats.entropy *= k;
  stats.approx_kl *= k;
  stats.clip_fraction *= k;
  return stats;
}

}  // namespace nlimb
