#include "nlimb/rl/rollout.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "nlimb/errors.hpp"
#include "nlimb/numerics/gaussian.hpp"

namespace nlimb {

Transition transition_at(const RolloutBatch& batch, Eigen::Index i) {
  Transition t;
  t.state = batch.states.col(i);
  t.design = batch.designs.col(i);
  t.action = batch.actions.col(i);
  t.reward = batch.rewards[i];
  t.value = batch.values[i];
  t.log_prob = batch.log_probs[i];
  t.done = batch.dones[static_cast<std::size_t>(i)] != 0;
  t.episode_id = batch.episode_ids[static_cast<std::size_t>(i)];
  return t;
}

RolloutBatch collect_rollouts(const PolicyState& policy,
                              const std::vector<Eigen::VectorXd>& designs,
                              const EnvFactory& env_factory, int horizon,
                              const std::vector<std::uint64_t>& seeds,
                              const WorkerPool& pool) {
  if (horizon < 0) throw ContractError("collect_rollouts: negative horizon");
  if (seeds.size() != designs.size())
    throw ContractError("collect_rollouts: one seed per design required");
  const auto n = static_cast<int>(designs.size());
  const Eigen::Index total = static_cast<Eigen::Index>(n) * horizon;
  const auto sdim = policy.state_dim();
  const auto ddim = policy.design_dim();
  const auto adim = policy.action_dim();
  for (const auto& d : designs)
    if (d.size() != ddim) throw ShapeError("collect_rollouts: design dimension");

  RolloutBatch b;
  b.num_segments = n;
  b.segment_length = horizon;
  b.states.resize(sdim, total);
  b.designs.resize(ddim, total);
  b.actions.resize(adim, total);
  b.rewards.resize(total);
  b.values.resize(total);
  b.log_probs.resize(total);
  b.dones.assign(static_cast<std::size_t>(total), 0);
  b.episode_ids.assign(static_cast<std::size_t>(total), 0);
  b.bootstrap_values = Eigen::VectorXd::Zero(n);
  if (total == 0) return b;

  const Eigen::VectorXd sigma = policy.log_std.array().exp();

  pool.for_chunks(designs.size(), [&](std::size_t begin, std::size_t end) {
    const auto m = static_cast<Eigen::Index>(end - begin);
    std::vector<std::unique_ptr<Environment>> envs;
    std::vector<Rng> rngs;
    Eigen::MatrixXd states(sdim, m);
    Eigen::MatrixXd design_mat(ddim, m);
    std::vector<int> episode(static_cast<std::size_t>(m), 0);
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t i = begin + static_cast<std::size_t>(j);
      try {
        envs.push_back(env_factory());
        if (envs.back()->state_dim() != sdim || envs.back()->action_dim() != adim)
          throw ShapeError("environment and policy dimensions differ");
        rngs.emplace_back(seeds[i]);
        states.col(j) = envs.back()->reset(designs[i], rngs.back());
      } catch (const std::exception& e) {
        throw RolloutError(i, e.what());
      }
      design_mat.col(j) = designs[i];
    }
    for (int k = 0; k < horizon; ++k) {
      const Eigen::MatrixXd inputs = policy_inputs(policy, states, design_mat);
      const Eigen::MatrixXd means = mlp_predict(policy.actor, inputs);
      const Eigen::MatrixXd values = mlp_predict(policy.critic, inputs);
      for (Eigen::Index j = 0; j < m; ++j) {
        const std::size_t i = begin + static_cast<std::size_t>(j);
        const Eigen::Index col = static_cast<Eigen::Index>(i) * horizon + k;
        Eigen::VectorXd action =
            means.col(j) +
            (sigma.array() * standard_normal_vector(rngs[j], adim).array()).matrix();
        b.states.col(col) = states.col(j);
        b.designs.col(col) = design_mat.col(j);
        b.actions.col(col) = action;
        b.values[col] = values(0, j);
        b.log_probs[col] =
            gaussian_log_prob(means.col(j), policy.log_std, action);
        b.episode_ids[static_cast<std::size_t>(col)] = episode[j];
        try {
          StepResult r = envs[j]->step(action);
          b.rewards[col] = r.reward;
          b.dones[static_cast<std::size_t>(col)] = r.done ? 1 : 0;
          if (r.done) {
            ++episode[j];
            states.col(j) = envs[j]->reset(designs[i], rngs[j]);
          } else {
            states.col(j) = r.state;
          }
        } catch (const std::exception& e) {
          throw RolloutError(i, e.what());
        }
      }
    }
    const Eigen::MatrixXd last =
        mlp_predict(policy.critic, policy_inputs(policy, states, design_mat));
    for (Eigen::Index j = 0; j < m; ++j)
      b.bootstrap_values[static_cast<Eigen::Index>(begin) + j] = last(0, j);
  });

  // Globally unique episode ids in segment order.
  int offset = 0;
  for (int s = 0; s < n; ++s) {
    int max_local = 0;
    for (int k = 0; k < horizon; ++k) {
      auto& id = b.episode_ids[static_cast<std::size_t>(s) * horizon + k];
      max_local = std::max(max_local, id);
      id += offset;
    }
    offset += max_local + 1;
  }
  return b;
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda,
                 bool normalize) {
  const Eigen::Index total = batch.size();
  batch.advantages.resize(total);
  batch.value_targets.resize(total);
  const int len = batch.segment_length;
  for (int s = 0; s < batch.num_segments; ++s) {
    double next_value = batch.bootstrap_values[s];
    double running = 0.0;
    for (int k = len - 1; k >= 0; --k) {
      const Eigen::Index i = static_cast<Eigen::Index>(s) * len + k;
      const double not_done = batch.dones[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
      const double delta =
          batch.rewards[i] + gamma * next_value * not_done - batch.values[i];
      running = delta + gamma * lambda * not_done * running;
      batch.advantages[i] = running;
      next_value = batch.values[i];
    }
  }
  batch.value_targets = batch.advantages + batch.values;
  if (normalize && total > 1) {
    const double mean = batch.advantages.mean();
    const double var =
        (batch.advantages.array() - mean).square().sum() / static_cast<double>(total);
    batch.advantages =
        ((batch.advantages.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
  }
  if (!batch.advantages.allFinite())
    throw NumericError("compute_gae produced non-finite advantages");
}

std::vector<double> completed_episode_returns(const RolloutBatch& batch,
                                              int segment, double gamma) {
  std::vector<double> out;
  double ret = 0.0;
  double discount = 1.0;
  const int len = batch.segment_length;
  for (int k = 0; k < len; ++k) {
    const Eigen::Index i = static_cast<Eigen::Index>(segment) * len + k;
    ret += discount * batch.rewards[i];
    discount *= gamma;
    if (batch.dones[static_cast<std::size_t>(i)]) {
      out.push_back(ret);
      ret = 0.0;
      discount = 1.0;
    }
  }
  return out;
}

std::vector<double> segment_mean_returns(const RolloutBatch& batch,
                                         double gamma) {
  std::vector<double> out;
  for (int s = 0; s < batch.num_segments; ++s) {
    const auto eps = completed_episode_returns(batch, s, gamma);
    if (!eps.empty()) {
      out.push_back(std::accumulate(eps.begin(), eps.end(), 0.0) /
                    static_cast<double>(eps.size()));
      continue;
    }
    double ret = 0.0;
    double discount = 1.0;
    for (int k = 0; k < batch.segment_length; ++k) {
      ret += discount * batch.rewards[static_cast<Eigen::Index>(s) *
                                          batch.segment_length + k];
      discount *= gamma;
    }
    out.push_back(ret);
  }
  return out;
}

namespace {

std::vector<EvaluationResult> evaluate_lockstep(
    const PolicyState& policy, const EnvFactory& env_factory,
    const std::vector<Eigen::VectorXd>& designs, int episodes,
    const std::vector<std::uint64_t>& seeds, const WorkerPool& pool,
    bool record) {
  if (episodes < 1) throw ContractError("evaluate_design: episodes must be >= 1");
  if (seeds.size() != designs.size())
    throw ContractError("evaluate_designs: one seed per design required");
  std::vector<EvaluationResult> results(designs.size());
  const auto sdim = policy.state_dim();
  const auto ddim = policy.design_dim();

  pool.for_chunks(designs.size(), [&](std::size_t begin, std::size_t end) {
    const auto m = static_cast<Eigen::Index>(end - begin);
    std::vector<std::unique_ptr<Environment>> envs;
    std::vector<Rng> rngs;
    std::vector<double> running(static_cast<std::size_t>(m), 0.0);
    std::vector<std::vector<double>> rewards(static_cast<std::size_t>(m));
    Eigen::MatrixXd states(sdim, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t i = begin + static_cast<std::size_t>(j);
      try {
        envs.push_back(env_factory());
        rngs.emplace_back(seeds[i]);
        states.col(j) = envs.back()->reset(designs[i], rngs.back());
      } catch (const std::exception& e) {
        throw RolloutError(i, e.what());
      }
    }
    // Columns of designs still running, compacted each step.
    std::vector<Eigen::Index> live(static_cast<std::size_t>(m));
    std::iota(live.begin(), live.end(), Eigen::Index{0});
    while (!live.empty()) {
      const auto k = static_cast<Eigen::Index>(live.size());
      Eigen::MatrixXd s(sdim, k);
      Eigen::MatrixXd d(ddim, k);
      for (Eigen::Index c = 0; c < k; ++c) {
        s.col(c) = states.col(live[c]);
        d.col(c) = designs[begin + static_cast<std::size_t>(live[c])];
      }
      const Eigen::MatrixXd means = policy_mean(policy, s, d);
      std::vector<Eigen::Index> still;
      for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index j = live[c];
        const std::size_t i = begin + static_cast<std::size_t>(j);
        auto& res = results[i];
        StepResult r;
        try {
          r = envs[j]->step(means.col(c));
        } catch (const std::exception& e) {
          throw RolloutError(i, e.what());
        }
        ++res.timesteps;
        running[j] += r.reward;
        if (record) rewards[j].push_back(r.reward);
        if (!r.done) {
          states.col(j) = r.state;
          still.push_back(j);
          continue;
        }
        res.episode_returns.push_back(running[j]);
        running[j] = 0.0;
        if (record) res.episode_rewards.push_back(std::move(rewards[j]));
        rewards[j].clear();
        if (static_cast<int>(res.episode_returns.size()) < episodes) {
          states.col(j) = envs[j]->reset(designs[i], rngs[j]);
          still.push_back(j);
        }
      }
      live.swap(still);
    }
  });

  for (auto& r : results)
    r.mean_return = std::accumulate(r.episode_returns.begin(),
                                    r.episode_returns.end(), 0.0) /
                    static_cast<double>(r.episode_returns.size());
  return results;
}

}  // namespace

EvaluationResult evaluate_design(const PolicyState& policy,
                                 const EnvFactory& env_factory,
                                 const Eigen::VectorXd& design, int episodes,
                                 std::uint64_t seed, bool record_rewards) {
  return evaluate_lockstep(policy, env_factory, {design}, episodes, {seed},
                           WorkerPool(1), record_rewards)
      .front();
}

std::vector<EvaluationResult> evaluate_designs(
    const PolicyState& policy, const EnvFactory& env_factory,
    const std::vector<Eigen::VectorXd>& designs, int episodes,
    const std::vector<std::uint64_t>& seeds, const WorkerPool& pool) {
  return evaluate_lockstep(policy, env_factory, designs, episodes, seeds, pool,
                           false);
}

}  // namespace nlimb
