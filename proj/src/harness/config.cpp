#include "nlimb/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "nlimb/errors.hpp"

namespace nlimb {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || v.empty())
    throw ConfigError("expected a number, got '" + std::string(v) + "'",
                      std::string(key));
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || v.empty())
    throw ConfigError("expected an integer, got '" + std::string(v) + "'",
                      std::string(key));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'",
                    std::string(key));
}

std::vector<double> parse_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_double(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list", std::string(key));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

std::string format_optional(const std::optional<double>& x) {
  return x ? format_double(*x) : "";
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define NLIMB_DOUBLE(KEY, MEMBER)                                            \
  Field {                                                                    \
    KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) {   \
      c.MEMBER = parse_double(k, v);                                         \
    },                                                                       \
        [](const ExperimentConfig& c) { return format_double(c.MEMBER); }    \
  }
#define NLIMB_INT(KEY, MEMBER)                                               \
  Field {                                                                    \
    KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) {   \
      c.MEMBER = parse_int<decltype(c.MEMBER)>(k, v);                        \
    },                                                                       \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }   \
  }
#define NLIMB_BOOL(KEY, MEMBER)                                                  \
  Field {                                                                        \
    KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) {       \
      c.MEMBER = parse_bool(k, v);                                               \
    },                                                                           \
        [](const ExperimentConfig& c) { return std::string(c.MEMBER ? "true" : "false"); } \
  }
#define NLIMB_OPTIONAL(KEY, MEMBER)                                          \
  Field {                                                                    \
    KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) {   \
      if (v.empty())                                                         \
        c.MEMBER.reset();                                                    \
      else                                                                   \
        c.MEMBER = parse_double(k, v);                                       \
    },                                                                       \
        [](const ExperimentConfig& c) { return format_optional(c.MEMBER); }  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"env",
            [](ExperimentConfig& c, std::string_view, std::string_view v) {
              c.env = std::string(v);
            },
            [](const ExperimentConfig& c) { return c.env; }},
      NLIMB_INT("seed", seed),
      Field{"output_dir",
            [](ExperimentConfig& c, std::string_view, std::string_view v) {
              c.output_dir = std::string(v);
            },
            [](const ExperimentConfig& c) { return c.output_dir; }},

      NLIMB_DOUBLE("cartpole.gravity", cartpole.gravity),
      NLIMB_DOUBLE("cartpole.cart_mass", cartpole.cart_mass),
      NLIMB_DOUBLE("cartpole.force_mag", cartpole.force_mag),
      NLIMB_DOUBLE("cartpole.dt", cartpole.dt),
      NLIMB_DOUBLE("cartpole.theta_limit", cartpole.theta_limit),
      NLIMB_DOUBLE("cartpole.x_limit", cartpole.x_limit),
      NLIMB_INT("cartpole.max_steps", cartpole.max_steps),
      NLIMB_DOUBLE("lqr.dt", lqr.dt),
      NLIMB_INT("lqr.max_steps", lqr.max_steps),
      NLIMB_DOUBLE("lqr.reset_range", lqr.reset_range),
      NLIMB_DOUBLE("reacher.dt", reacher.dt),
      NLIMB_INT("reacher.max_steps", reacher.max_steps),
      NLIMB_DOUBLE("reacher.max_joint_speed", reacher.max_joint_speed),
      NLIMB_DOUBLE("reacher.target_inner", reacher.target_inner),
      NLIMB_DOUBLE("reacher.target_outer", reacher.target_outer),

      NLIMB_OPTIONAL("reward.alive", reward_alive),
      NLIMB_OPTIONAL("reward.state_cost", reward_state_cost),
      NLIMB_OPTIONAL("reward.action_cost", reward_action_cost),
      Field{"design.default",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              if (v.empty()) {
                c.default_design.reset();
                return;
              }
              const auto xs = parse_list(k, v);
              c.default_design =
                  Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
            },
            [](const ExperimentConfig& c) {
              if (!c.default_design) return std::string();
              return join(std::vector<double>(c.default_design->begin(),
                                              c.default_design->end()));
            }},

      NLIMB_INT("gmm.components", gmm_components),
      NLIMB_DOUBLE("gmm.mean_lr", design_step.mean_lr),
      NLIMB_DOUBLE("gmm.log_var_lr", design_step.log_var_lr),
      Field{"gmm.baseline",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              try {
                c.design_step.baseline = parse_return_baseline(v);
              } catch (const std::exception& e) {
                throw ConfigError(e.what(), std::string(k));
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(to_string(c.design_step.baseline));
            }},
      NLIMB_BOOL("gmm.discounted_returns", discounted_returns),

      Field{"policy.hidden",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.policy.hidden.clear();
              for (double h : parse_list(k, v)) {
                if (h < 1 || h != static_cast<double>(static_cast<Eigen::Index>(h)))
                  throw ConfigError("hidden widths must be positive integers",
                                    std::string(k));
                c.policy.hidden.push_back(static_cast<Eigen::Index>(h));
              }
            },
            [](const ExperimentConfig& c) { return join(c.policy.hidden); }},
      NLIMB_DOUBLE("policy.init_log_std", policy.init_log_std),
      NLIMB_DOUBLE("policy.output_scale", policy.actor_output_scale),

      NLIMB_DOUBLE("ppo.clip", ppo.clip),
      NLIMB_DOUBLE("ppo.gamma", ppo.gamma),
      NLIMB_DOUBLE("ppo.lambda", ppo.gae_lambda),
      NLIMB_INT("ppo.epochs", ppo.epochs),
      NLIMB_INT("ppo.minibatch_size", ppo.minibatch_size),
      NLIMB_DOUBLE("ppo.policy_lr", ppo.policy_lr),
      NLIMB_DOUBLE("ppo.value_lr", ppo.value_lr),
      NLIMB_DOUBLE("ppo.entropy_coef", ppo.entropy_coef),
      NLIMB_DOUBLE("ppo.value_coef", ppo.value_coef),
      NLIMB_DOUBLE("ppo.max_grad_norm", ppo.max_grad_norm),

      NLIMB_INT("schedule.total", schedule.total),
      NLIMB_INT("schedule.warmup", schedule.warmup),
      NLIMB_INT("schedule.prune_interval", schedule.prune_interval),
      NLIMB_INT("schedule.finalize", schedule.finalize),
      NLIMB_INT("schedule.designs", schedule.designs),
      NLIMB_INT("schedule.horizon", schedule.horizon),

      NLIMB_INT("prune.samples_per_component", prune_samples),
      NLIMB_BOOL("prune.paired_seeds", prune_paired_seeds),
      NLIMB_INT("eval.episodes", eval_episodes),
      NLIMB_INT("histogram.interval", histogram_interval),
      NLIMB_INT("histogram.samples", histogram_samples),
      NLIMB_BOOL("rollout.common_random_numbers", common_random_numbers),
      NLIMB_INT("checkpoint.interval", checkpoint_interval),
      NLIMB_INT("log.progress_every", progress_every),

      NLIMB_INT("baseline.fixed_budget", fixed_budget),
      NLIMB_INT("random_search.per_candidate", random_search_per_candidate),
      NLIMB_INT("random_search.total", random_search_total),
      NLIMB_INT("bayesopt.per_candidate", bayesopt_per_candidate),
      NLIMB_INT("bayesopt.total", bayesopt_total),

      NLIMB_INT("oracle.grid_points", oracle_grid_points),
      NLIMB_INT("oracle.reacher_grid", oracle_reacher_grid),
      NLIMB_INT("oracle.reacher_budget", oracle_reacher_budget),
  };
  return table;
}

#undef NLIMB_DOUBLE
#undef NLIMB_INT
#undef NLIMB_BOOL
#undef NLIMB_OPTIONAL

// design.<parameter>.lower / design.<parameter>.upper
bool set_design_bound(ExperimentConfig& c, std::string_view key,
                      std::string_view value) {
  constexpr std::string_view prefix = "design.";
  if (key.substr(0, prefix.size()) != prefix) return false;
  const auto rest = key.substr(prefix.size());
  const auto dot = rest.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return false;
  const auto name = std::string(rest.substr(0, dot));
  const auto which = rest.substr(dot + 1);
  if (which != "lower" && which != "upper") return false;
  auto& o = c.design_bounds[name];
  (which == "lower" ? o.lower : o.upper) = parse_double(key, value);
  return true;
}

template <typename Spec>
Spec with_overrides(Spec spec, const ExperimentConfig& c) {
  if (c.reward_alive) spec.weights.alive = *c.reward_alive;
  if (c.reward_state_cost) spec.weights.state_cost = *c.reward_state_cost;
  if (c.reward_action_cost) spec.weights.action_cost = *c.reward_action_cost;
  for (const auto& [name, o] : c.design_bounds) {
    const auto i = spec.space.find(name);
    if (i < 0)
      throw ConfigError("no design parameter named '" + name + "' in env " + c.env,
                        "design." + name);
    try {
      spec.space.set_bounds(i, o.lower.value_or(spec.space.lower()[i]),
                            o.upper.value_or(spec.space.upper()[i]));
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), "design." + name);
    }
  }
  if (c.default_design) spec.default_design = *c.default_design;
  return spec;
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(what, key);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

void TrainSchedule::validate() const {
  require(total > 0, "schedule.total", "must be > 0");
  require(warmup >= 0 && warmup <= total, "schedule.warmup",
          "must lie in [0, schedule.total]");
  require(prune_interval > 0, "schedule.prune_interval", "must be > 0");
  require(finalize >= 0 && finalize < total, "schedule.finalize",
          "must lie in [0, schedule.total)");
  require(designs >= 1, "schedule.designs", "must be >= 1");
  require(horizon >= 1, "schedule.horizon", "must be >= 1");
}

void ExperimentConfig::validate() const {
  const auto& names = environment_names();
  require(std::find(names.begin(), names.end(), env) != names.end(), "env",
          "unknown environment (cartpole, lqr, reacher)");
  require(gmm_components >= 1 && (gmm_components & (gmm_components - 1)) == 0,
          "gmm.components", "must be a power of two");
  require(design_step.mean_lr >= 0.0, "gmm.mean_lr", "must be >= 0");
  require(design_step.log_var_lr >= 0.0, "gmm.log_var_lr", "must be >= 0");
  require(prune_samples >= 1, "prune.samples_per_component", "must be >= 1");
  require(!policy.hidden.empty(), "policy.hidden", "needs at least one layer");
  require(policy.actor_output_scale > 0.0, "policy.output_scale", "must be > 0");
  ppo.validate();
  schedule.validate();
  require(eval_episodes >= 1, "eval.episodes", "must be >= 1");
  require(histogram_interval >= 0, "histogram.interval", "must be >= 0");
  require(histogram_samples >= 1, "histogram.samples", "must be >= 1");
  require(checkpoint_interval >= 0, "checkpoint.interval", "must be >= 0");
  require(progress_every >= 0, "log.progress_every", "must be >= 0");
  require(fixed_budget >= 0, "baseline.fixed_budget", "must be >= 0");
  require(random_search_per_candidate >= 0, "random_search.per_candidate", "must be >= 0");
  require(random_search_total >= 0, "random_search.total", "must be >= 0");
  require(bayesopt_per_candidate >= 0, "bayesopt.per_candidate", "must be >= 0");
  require(bayesopt_total >= 0, "bayesopt.total", "must be >= 0");
  require(oracle_grid_points >= 1, "oracle.grid_points", "must be >= 1");
  require(oracle_reacher_grid >= 1, "oracle.reacher_grid", "must be >= 1");
  require(oracle_reacher_budget >= 1, "oracle.reacher_budget", "must be >= 1");
  require(cartpole.dt > 0 && lqr.dt > 0 && reacher.dt > 0, "dt", "must be > 0");
  require(cartpole.max_steps >= 1, "cartpole.max_steps", "must be >= 1");
  require(lqr.max_steps >= 1, "lqr.max_steps", "must be >= 1");
  require(reacher.max_steps >= 1, "reacher.max_steps", "must be >= 1");
  require(reacher.target_inner >= 0 && reacher.target_inner <= reacher.target_outer,
          "reacher.target_inner", "must lie in [0, reacher.target_outer]");
  // Resolving the environment checks design overrides and the default design.
  const auto space = resolved_design_space(*this);
  if (!space.contains(resolved_default_design(*this)))
    throw ConfigError("must lie inside the design bounds", "design.default");
}

void set_config_value(ExperimentConfig& config, std::string_view key,
                      std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, key, value);
      return;
    }
  }
  if (set_design_bound(config, key, value)) return;
  throw ConfigError("unknown configuration key", std::string(key));
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value",
                        std::string(trim(line)));
    set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path, "--config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override must be KEY=VALUE", std::string(assignment));
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string config_to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  for (const auto& [name, o] : config.design_bounds) {
    if (o.lower) out += "design." + name + ".lower = " + format_double(*o.lower) + "\n";
    if (o.upper) out += "design." + name + ".upper = " + format_double(*o.upper) + "\n";
  }
  return out;
}

const std::vector<std::string>& environment_names() {
  static const std::vector<std::string> names = {"cartpole", "lqr", "reacher"};
  return names;
}

EnvFactory make_env_factory(const ExperimentConfig& config) {
  if (config.env == "cartpole") {
    auto spec = with_overrides(config.cartpole, config);
    return [spec] { return std::unique_ptr<Environment>(new CartPoleEnv(spec)); };
  }
  if (config.env == "lqr") {
    auto spec = with_overrides(config.lqr, config);
    return [spec] { return std::unique_ptr<Environment>(new LqrEnv(spec)); };
  }
  if (config.env == "reacher") {
    auto spec = with_overrides(config.reacher, config);
    return [spec] { return std::unique_ptr<Environment>(new ReacherEnv(spec)); };
  }
  throw ConfigError("unknown environment '" + config.env + "'", "env");
}

DesignSpace resolved_design_space(const ExperimentConfig& config) {
  if (config.env == "cartpole") return with_overrides(config.cartpole, config).space;
  if (config.env == "lqr") return with_overrides(config.lqr, config).space;
  if (config.env == "reacher") return with_overrides(config.reacher, config).space;
  throw ConfigError("unknown environment '" + config.env + "'", "env");
}

Eigen::VectorXd resolved_default_design(const ExperimentConfig& config) {
  Eigen::VectorXd d;
  if (config.env == "cartpole") d = with_overrides(config.cartpole, config).default_design;
  else if (config.env == "lqr") d = with_overrides(config.lqr, config).default_design;
  else if (config.env == "reacher") d = with_overrides(config.reacher, config).default_design;
  else throw ConfigError("unknown environment '" + config.env + "'", "env");
  if (d.size() != resolved_design_space(config).dimension())
    throw ConfigError("wrong number of components", "design.default");
  return d;
}

TrainingSetup make_setup(const ExperimentConfig& config, const WorkerPool* pool) {
  auto setup = make_training_setup(make_env_factory(config), config.policy, config.ppo,
                                   config.schedule.designs, config.schedule.horizon,
                                   config.eval_episodes);
  setup.pool = pool;
  return setup;
}

}  // namespace nlimb
