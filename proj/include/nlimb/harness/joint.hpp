#pragma once

// Joint design and control optimization: PPO on designs sampled from a
// Gaussian mixture, score-function updates of the mixture after warm-up,
// periodic halving of the components, and fine-tuning on the final mode.

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "nlimb/design/gmm.hpp"
#include "nlimb/harness/config.hpp"
#include "nlimb/harness/runlog.hpp"
#include "nlimb/parallel.hpp"
#include "nlimb/rl/policy.hpp"
#include "nlimb/rl/ppo.hpp"

namespace nlimb {

// Everything needed to continue a run exactly where it stopped.
struct JointState {
  std::string config_text;  // canonical config_to_text form
  std::int64_t iteration = 0;
  std::int64_t timesteps = 0;
  std::int64_t eval_timesteps = 0;
  bool finalized = false;
  Eigen::VectorXd omega_star;  // empty until finalized
  PolicyState policy;
  PpoOptimizer optimizer;
  GmmState gmm;
  RunLog log;
};

struct JointResult {
  Eigen::VectorXd design;  // omega*
  PolicyState policy;
  RunLog log;
  double final_return = 0.0;  // mean over eval.episodes on omega*
  std::int64_t timesteps = 0;
  std::int64_t eval_timesteps = 0;  // pruning, histograms and final evaluation
};

// Samples `sample_count` designs from the mixture and runs one deterministic
// episode on each. `timesteps` receives the evaluation steps spent.
HistogramRecord dump_histogram(const PolicyState& policy, const GmmState& gmm,
                               const EnvFactory& env_factory, int sample_count,
                               std::uint64_t seed, std::int64_t at_timestep,
                               const WorkerPool& pool, std::int64_t* timesteps = nullptr);

class JointTrainer {
 public:
  JointTrainer(const ExperimentConfig& config, const WorkerPool* pool = nullptr);
  // Resumes from a saved state; the configuration comes from the state.
  JointTrainer(JointState state, const WorkerPool* pool = nullptr);

  bool done() const { return state_.timesteps >= config_.schedule.total; }
  // One iteration of the loop.
  void step();
  // Final evaluation of omega* (finalizing first if the schedule never did).
  JointResult finish();

  const JointState& state() const { return state_; }
  const ExperimentConfig& config() const { return config_; }

 private:
  void finalize();
  void prune(std::uint64_t it);

  ExperimentConfig config_;
  TrainingSetup setup_;
  JointState state_;
};

struct JointRunOptions {
  const WorkerPool* pool = nullptr;
  bool write_files = true;        // logs and checkpoints under output_dir
  std::string resume_checkpoint;  // empty: fresh run
  // Stop after this many iterations without finishing (0: run to the end).
  std::int64_t stop_after_iterations = 0;
};

inline constexpr const char* kCheckpointFile = "checkpoint.nlmb";
inline constexpr const char* kSummaryFile = "summary.csv";

// Runs the full schedule. On a numeric failure the logs gathered so far are
// written before the error propagates.
JointResult run_joint_training(const ExperimentConfig& config,
                               const JointRunOptions& options = {});

}  // namespace nlimb
