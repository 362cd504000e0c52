#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nlimb/design/gmm.hpp"
#include "nlimb/env/cartpole.hpp"
#include "nlimb/env/lqr.hpp"
#include "nlimb/env/reacher.hpp"
#include "nlimb/parallel.hpp"
#include "nlimb/rl/policy.hpp"
#include "nlimb/rl/ppo.hpp"
#include "nlimb/rl/training.hpp"

namespace nlimb {

struct TrainSchedule {
  std::int64_t total = 3'000'000;         // T_total
  std::int64_t warmup = 300'000;          // C
  std::int64_t prune_interval = 600'000;  // N
  std::int64_t finalize = 300'000;        // fixed-design fine-tuning at the end
  int designs = 8;                        // n
  int horizon = 1024;                     // t

  std::int64_t per_iteration() const {
    return static_cast<std::int64_t>(designs) * horizon;
  }
  void validate() const;
};

struct DesignOverride {
  std::optional<double> lower;
  std::optional<double> upper;
};

struct ExperimentConfig {
  std::string env = "lqr";
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";

  CartPoleSpec cartpole;
  LqrSpec lqr;
  ReacherSpec reacher;

  std::optional<double> reward_alive;
  std::optional<double> reward_state_cost;
  std::optional<double> reward_action_cost;
  std::map<std::string, DesignOverride> design_bounds;  // by parameter name
  std::optional<Eigen::VectorXd> default_design;

  int gmm_components = 8;
  DistributionStep design_step;
  bool discounted_returns = false;
  int prune_samples = 100;
  bool prune_paired_seeds = true;  // sample j of every component shares a seed

  PolicyInit policy;
  PpoConfig ppo;
  TrainSchedule schedule;

  int eval_episodes = 100;
  std::int64_t histogram_interval = 600'000;  // 0 disables
  int histogram_samples = 100;
  bool common_random_numbers = false;
  std::int64_t checkpoint_interval = 0;  // 0: checkpoint only at the end
  int progress_every = 0;                // 0: silent

  std::int64_t fixed_budget = 0;                // 0: schedule.total
  std::int64_t random_search_per_candidate = 0;  // 0: schedule.total / 10
  std::int64_t random_search_total = 0;          // 0: 3 * schedule.total
  std::int64_t bayesopt_per_candidate = 0;       // 0: schedule.total / 10
  std::int64_t bayesopt_total = 0;               // 0: schedule.total

  int oracle_grid_points = 201;
  int oracle_reacher_grid = 5;
  std::int64_t oracle_reacher_budget = 100'000;

  // Throws ConfigError naming the first offending key.
  void validate() const;
};

// Applies one `key = value` assignment. Unknown keys and malformed values
// throw ConfigError carrying the key.
void set_config_value(ExperimentConfig& config, std::string_view key,
                      std::string_view value);

// Parses `key = value` lines with `#` comments onto `base`.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path);

// Applies a `KEY=VALUE` override string.
void apply_override(ExperimentConfig& config, std::string_view assignment);

// Canonical text form; parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const ExperimentConfig& config);

// Names accepted by `env`.
const std::vector<std::string>& environment_names();

// Resolved environment: spec overrides, reward weights and design bounds
// applied.
EnvFactory make_env_factory(const ExperimentConfig& config);
DesignSpace resolved_design_space(const ExperimentConfig& config);
Eigen::VectorXd resolved_default_design(const ExperimentConfig& config);

TrainingSetup make_setup(const ExperimentConfig& config, const WorkerPool* pool);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace nlimb
