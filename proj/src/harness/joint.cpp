#include "nlimb/harness/joint.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "nlimb/errors.hpp"
#include "nlimb/harness/checkpoint.hpp"
#include "nlimb/random.hpp"
#include "nlimb/rl/training.hpp"

namespace nlimb {
namespace {

enum Stream : std::uint64_t {
  kGmmInit = 1,
  kPolicyInit = 2,
  kDesigns = 3,
  kRollout = 4,
  kUpdate = 5,
  kPrune = 6,
  kHistogram = 7,
  kFinalEval = 8,
};

bool crossed(std::int64_t before, std::int64_t after, std::int64_t interval) {
  return interval > 0 && after / interval > before / interval;
}

}  // namespace

HistogramRecord dump_histogram(const PolicyState& policy, const GmmState& gmm,
                               const EnvFactory& env_factory, int sample_count,
                               std::uint64_t seed, std::int64_t at_timestep,
                               const WorkerPool& pool, std::int64_t* timesteps) {
  Rng rng(derive_seed(seed, {0}));
  std::vector<Eigen::VectorXd> designs;
  std::vector<std::uint64_t> seeds;
  for (int j = 0; j < sample_count; ++j) {
    designs.push_back(sample_design(gmm, rng).clamped);
    seeds.push_back(derive_seed(seed, {1, static_cast<std::uint64_t>(j)}));
  }
  const auto results = evaluate_designs(policy, env_factory, designs, 1, seeds, pool);
  HistogramRecord h;
  h.timesteps = at_timestep;
  h.designs.resize(gmm.dimension(), sample_count);
  for (int j = 0; j < sample_count; ++j) {
    h.designs.col(j) = designs[static_cast<std::size_t>(j)];
    h.returns.push_back(results[static_cast<std::size_t>(j)].mean_return);
    if (timesteps) *timesteps += results[static_cast<std::size_t>(j)].timesteps;
  }
  return h;
}

JointTrainer::JointTrainer(const ExperimentConfig& config, const WorkerPool* pool)
    : config_(config) {
  config_.validate();
  setup_ = make_setup(config_, pool);
  state_.config_text = config_to_text(config_);
  Rng gmm_rng(derive_seed(config_.seed, {kGmmInit}));
  state_.gmm = init_gmm(setup_.space, config_.gmm_components, gmm_rng);
  Rng policy_rng(derive_seed(config_.seed, {kPolicyInit}));
  state_.policy = init_policy(setup_.state_dim, setup_.space, setup_.action_dim,
                              config_.policy, policy_rng);
  state_.optimizer = make_ppo_optimizer(state_.policy);
  for (const auto& p : setup_.space.parameters())
    state_.log.design_names.push_back(p.name);
  state_.log.num_components = config_.gmm_components;
}

JointTrainer::JointTrainer(JointState state, const WorkerPool* pool)
    : config_(parse_config(state.config_text)), state_(std::move(state)) {
  config_.validate();
  setup_ = make_setup(config_, pool);
  if (!(state_.gmm.space == setup_.space))
    throw LoadError("checkpoint design space does not match its config");
}

void JointTrainer::finalize() {
  state_.omega_star = gmm_mode(state_.gmm);
  state_.finalized = true;
}

void JointTrainer::prune(std::uint64_t it) {
  const auto& gmm = state_.gmm;
  const auto active = gmm.active_indices();
  const int per = config_.prune_samples;
  Rng rng(derive_seed(config_.seed, {kPrune, it}));
  std::vector<Eigen::VectorXd> designs;
  std::vector<std::uint64_t> seeds;
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (int j = 0; j < per; ++j) {
      designs.push_back(sample_component(gmm, active[a], rng).clamped);
      const std::uint64_t index = config_.prune_paired_seeds
                                      ? static_cast<std::uint64_t>(j)
                                      : a * static_cast<std::uint64_t>(per) + j;
      seeds.push_back(derive_seed(config_.seed, {kPrune, it, 1, index}));
    }
  }
  const auto results = evaluate_designs(state_.policy, setup_.env_factory, designs, 1,
                                        seeds, setup_.workers());
  std::vector<double> scores(gmm.components.size(),
                             std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < active.size(); ++a) {
    double sum = 0.0;
    for (int j = 0; j < per; ++j) {
      const auto& r = results[a * static_cast<std::size_t>(per) + static_cast<std::size_t>(j)];
      sum += r.mean_return;
      state_.eval_timesteps += r.timesteps;
    }
    scores[static_cast<std::size_t>(active[a])] = sum / per;
  }
  state_.gmm = prune_by_scores(gmm, scores);
}

void JointTrainer::step() {
  if (done()) throw ContractError("JointTrainer::step after the schedule ended");
  const auto& sched = config_.schedule;
  const auto it = static_cast<std::uint64_t>(state_.iteration);
  if (!state_.finalized && sched.finalize > 0 &&
      state_.timesteps >= sched.total - sched.finalize)
    finalize();

  std::vector<DesignSample> samples;
  std::vector<Eigen::VectorXd> designs;
  if (state_.finalized) {
    designs.assign(static_cast<std::size_t>(sched.designs), state_.omega_star);
  } else {
    Rng rng(derive_seed(config_.seed, {kDesigns, it}));
    for (int i = 0; i < sched.designs; ++i) {
      samples.push_back(sample_design(state_.gmm, rng));
      designs.push_back(samples.back().clamped);
    }
  }
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < sched.designs; ++i) {
    const std::uint64_t index =
        config_.common_random_numbers ? 0 : static_cast<std::uint64_t>(i);
    seeds.push_back(derive_seed(config_.seed, {kRollout, it, index}));
  }
  auto out = ppo_iteration(state_.policy, state_.optimizer, setup_, designs, seeds,
                           derive_seed(config_.seed, {kUpdate, it}));
  const std::int64_t before = state_.timesteps;
  state_.timesteps += sched.per_iteration();

  const auto returns = segment_mean_returns(
      out.batch, config_.discounted_returns ? config_.ppo.gamma : 1.0);
  IterationRecord rec;
  rec.iteration = state_.iteration;
  rec.mean_return = 0.0;
  for (double r : returns) rec.mean_return += r;
  rec.mean_return /= static_cast<double>(returns.size());
  rec.min_return = *std::min_element(returns.begin(), returns.end());
  rec.max_return = *std::max_element(returns.begin(), returns.end());
  rec.approx_kl = out.stats.approx_kl;
  rec.entropy = out.stats.entropy;
  rec.value_loss = out.stats.value_loss;

  if (!state_.finalized && state_.timesteps > sched.warmup) {
    state_.gmm = update_distribution(state_.gmm, samples, returns, config_.design_step);
    rec.design_updated = true;
    if (state_.gmm.active_count() > 1 &&
        crossed(before, state_.timesteps, sched.prune_interval)) {
      prune(it);
      rec.pruned = true;
    }
  }
  if (crossed(before, state_.timesteps, config_.histogram_interval)) {
    GmmState source = state_.gmm;
    if (state_.finalized) {
      // Point mass at omega*: a single component at the variance floor.
      source.components.assign(1, {state_.omega_star, source.log_var_floor()});
      source.active.assign(1, true);
    }
    state_.log.append(dump_histogram(
        state_.policy, source, setup_.env_factory, config_.histogram_samples,
        derive_seed(config_.seed, {kHistogram, it}), state_.timesteps,
        setup_.workers(), &state_.eval_timesteps));
  }

  rec.timesteps = state_.timesteps;
  rec.eval_timesteps = state_.eval_timesteps;
  rec.active_components = state_.gmm.active_count();
  rec.finalized = state_.finalized;
  rec.components = state_.gmm.components;
  rec.active = state_.gmm.active;
  state_.log.append(std::move(rec));
  ++state_.iteration;
}

JointResult JointTrainer::finish() {
  if (!state_.finalized) finalize();
  const auto eval = evaluate_design(state_.policy, setup_.env_factory, state_.omega_star,
                                    config_.eval_episodes,
                                    derive_seed(config_.seed, {kFinalEval}));
  JointResult r;
  r.design = state_.omega_star;
  r.policy = state_.policy;
  r.log = state_.log;
  r.final_return = eval.mean_return;
  r.timesteps = state_.timesteps;
  r.eval_timesteps = state_.eval_timesteps + eval.timesteps;
  return r;
}

namespace {

void write_summary(const std::string& dir, const JointResult& r,
                   const std::vector<std::string>& names) {
  std::ofstream out(std::filesystem::path(dir) / kSummaryFile, std::ios::trunc);
  out << "key,value\n";
  for (std::size_t d = 0; d < names.size(); ++d)
    out << "design_" << names[d] << ","
        << format_double(r.design[static_cast<Eigen::Index>(d)]) << "\n";
  out << "final_return," << format_double(r.final_return) << "\n";
  out << "timesteps," << r.timesteps << "\n";
  out << "eval_timesteps," << r.eval_timesteps << "\n";
}

}  // namespace

JointResult run_joint_training(const ExperimentConfig& config,
                               const JointRunOptions& options) {
  JointTrainer trainer =
      options.resume_checkpoint.empty()
          ? JointTrainer(config, options.pool)
          : JointTrainer(load_checkpoint(options.resume_checkpoint), options.pool);
  const auto& cfg = trainer.config();
  const std::string dir = cfg.output_dir;
  if (options.write_files) std::filesystem::create_directories(dir);
  const auto checkpoint_path = (std::filesystem::path(dir) / kCheckpointFile).string();

  std::int64_t ran = 0;
  try {
    while (!trainer.done()) {
      const std::int64_t before = trainer.state().timesteps;
      trainer.step();
      ++ran;
      const auto& s = trainer.state();
      if (cfg.progress_every > 0 && s.iteration % cfg.progress_every == 0) {
        const auto& rec = s.log.iterations.back();
        std::fprintf(stderr, "iter %lld  T=%lld  mean_return=%.4g  active=%d%s\n",
                     static_cast<long long>(rec.iteration),
                     static_cast<long long>(rec.timesteps), rec.mean_return,
                     rec.active_components, rec.finalized ? "  finalized" : "");
      }
      if (options.write_files &&
          crossed(before, s.timesteps, cfg.checkpoint_interval)) {
        save_checkpoint(checkpoint_path, s);
        s.log.write(dir);
      }
      if (options.stop_after_iterations > 0 && ran >= options.stop_after_iterations &&
          !trainer.done()) {
        if (options.write_files) {
          save_checkpoint(checkpoint_path, s);
          s.log.write(dir);
        }
        JointResult partial;
        partial.policy = s.policy;
        partial.log = s.log;
        partial.final_return = std::numeric_limits<double>::quiet_NaN();
        partial.timesteps = s.timesteps;
        partial.eval_timesteps = s.eval_timesteps;
        return partial;
      }
    }
  } catch (const NumericError&) {
    if (options.write_files) trainer.state().log.write(dir);
    throw;
  }

  auto result = trainer.finish();
  if (options.write_files) {
    save_checkpoint(checkpoint_path, trainer.state());
    result.log.write(dir);
    write_summary(dir, result, result.log.design_names);
  }
  return result;
}

}  // namespace nlimb
