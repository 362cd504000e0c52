#include "nlimb/harness/cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "nlimb/baselines/search.hpp"
#include "nlimb/errors.hpp"
#include "nlimb/harness/checkpoint.hpp"
#include "nlimb/harness/config.hpp"
#include "nlimb/harness/joint.hpp"

namespace nlimb {
namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value lines)");
  cmd->add_option("--seed", o.seed, "Root random seed");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--override", o.overrides, "KEY=VALUE, repeatable");
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config_file(o.config_path);
  for (const auto& ov : o.overrides) apply_override(c, ov);
  if (o.seed) c.seed = *o.seed;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  c.validate();
  return c;
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

Eigen::VectorXd parse_vector(const std::string& text, const char* flag) {
  ExperimentConfig scratch;
  try {
    set_config_value(scratch, "design.default", text);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), flag);
  }
  return *scratch.default_design;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string candidates_csv(const SearchResult& r, const DesignSpace& space) {
  std::string s = "index";
  for (const auto& p : space.parameters()) s += "," + p.name;
  s += ",return,timesteps\n";
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    s += std::to_string(i) + "," + format_vector(c.design) + "," + format_double(c.score) +
         "," + std::to_string(c.cost) + "\n";
  }
  return s;
}

int run_search(const ExperimentConfig& cfg, bool bayes, std::ostream& out) {
  WorkerPool pool;
  auto setup = make_setup(cfg, &pool);
  const auto total = cfg.schedule.total;
  std::int64_t per, budget;
  if (bayes) {
    per = cfg.bayesopt_per_candidate ? cfg.bayesopt_per_candidate : total / 10;
    budget = cfg.bayesopt_total ? cfg.bayesopt_total : total;
  } else {
    per = cfg.random_search_per_candidate ? cfg.random_search_per_candidate : total / 10;
    budget = cfg.random_search_total ? cfg.random_search_total : 3 * total;
  }
  const auto evaluator = rl_candidate_evaluator(setup, per, cfg.seed);
  const auto r = bayes ? bayesopt_search(setup.space, evaluator, per, budget, cfg.seed)
                       : random_search(setup.space, evaluator, per, budget, cfg.seed);
  write_text(std::filesystem::path(cfg.output_dir) / (bayes ? "bayesopt.csv" : "random_search.csv"),
             candidates_csv(r, setup.space));
  out << "best_design " << format_vector(r.best_design) << "\n"
      << "best_return " << format_double(r.best_return) << "\n"
      << "candidates " << r.candidates.size() << "\n"
      << "timesteps " << r.ledger.consumed() << "\n"
      << "eval_timesteps " << r.eval_timesteps << "\n";
  return 0;
}

int run_oracle(const ExperimentConfig& cfg, std::ostream& out) {
  const auto space = resolved_design_space(cfg);
  std::string csv = space.parameters()[0].name + "," + space.parameters()[1].name + ",return\n";
  Eigen::VectorXd best;
  double best_return = 0.0;
  if (cfg.env == "lqr") {
    LqrSpec spec = cfg.lqr;
    spec.space = space;
    const auto o = lqr_design_oracle(spec, cfg.oracle_grid_points);
    for (Eigen::Index i = 0; i < o.gain_grid.size(); ++i)
      for (Eigen::Index j = 0; j < o.damping_grid.size(); ++j)
        csv += format_double(o.gain_grid[i]) + "," + format_double(o.damping_grid[j]) + "," +
               format_double(o.expected_return(i, j)) + "\n";
    best = o.best_design;
    best_return = o.best_return;
  } else if (cfg.env == "reacher") {
    // Grid of short fixed-design trainings; coarse but model-free.
    WorkerPool pool;
    const auto setup = make_setup(cfg, &pool);
    const int g = cfg.oracle_reacher_grid;
    int index = 0;
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        Eigen::Vector2d u(g == 1 ? 0.5 : static_cast<double>(i) / (g - 1),
                          g == 1 ? 0.5 : static_cast<double>(j) / (g - 1));
        const Eigen::VectorXd d = space.from_unit(u);
        const auto r = train_fixed_design(d, setup, cfg.oracle_reacher_budget,
                                          derive_seed(cfg.seed, {static_cast<std::uint64_t>(index++)}));
        csv += format_vector(d) + "," + format_double(r.mean_return) + "\n";
        if (best.size() == 0 || r.mean_return > best_return) {
          best = d;
          best_return = r.mean_return;
        }
      }
    }
  } else {
    throw ConfigError("no oracle is defined for this environment", "env");
  }
  write_text(std::filesystem::path(cfg.output_dir) / "oracle.csv", csv);
  out << "best_design " << format_vector(best) << "\n"
      << "best_return " << format_double(best_return) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint optimization of physical design and control"};
  app.name("nlimb");
  app.require_subcommand(1);

  CommonOptions common;
  std::string resume, checkpoint_path, design_text, runlog_path, report_out;
  int episodes = 100;

  auto* joint = app.add_subcommand("train-joint", "Optimize design distribution and policy");
  add_common(joint, common);
  joint->add_option("--resume", resume, "Continue from a checkpoint");
  auto* fixed = app.add_subcommand("train-fixed", "Train a policy on one design");
  add_common(fixed, common);
  fixed->add_option("--design", design_text, "Comma-separated design (default: env default)");
  auto* rs = app.add_subcommand("random-search", "Random design search baseline");
  add_common(rs, common);
  auto* bo = app.add_subcommand("bayesopt", "Bayesian optimization baseline");
  add_common(bo, common);
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpointed policy");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  ev->add_option("--design", design_text, "Comma-separated design (default: omega*)");
  ev->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  auto* oracle = app.add_subcommand("oracle", "Grid oracle over the design space");
  add_common(oracle, common);
  auto* report = app.add_subcommand("report", "Plot-ready CSV from a run log");
  report->add_option("--runlog", runlog_path, "runlog.csv path")->required();
  report->add_option("--out", report_out, "Output file (default: stdout)");

  if (argc <= 1) {
    err << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*report) {
      std::ifstream in(runlog_path);
      if (!in) throw LoadError("cannot open " + runlog_path);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto csv = report_csv(parse_runlog_csv(ss.str()));
      if (report_out.empty())
        out << csv;
      else
        write_text(report_out, csv);
      return 0;
    }

    if (*ev) {
      const auto state = load_checkpoint(checkpoint_path);
      ExperimentConfig cfg = parse_config(state.config_text);
      for (const auto& ov : common.overrides) apply_override(cfg, ov);
      if (common.seed) cfg.seed = *common.seed;
      cfg.validate();
      Eigen::VectorXd design;
      if (!design_text.empty())
        design = parse_vector(design_text, "--design");
      else if (state.omega_star.size() > 0)
        design = state.omega_star;
      else
        design = gmm_mode(state.gmm);
      const auto r = evaluate_design(state.policy, make_env_factory(cfg), design, episodes,
                                     derive_seed(cfg.seed, {0xe7a1}));
      out << "design " << format_vector(design) << "\n"
          << "episodes " << episodes << "\n"
          << "mean_return " << format_double(r.mean_return) << "\n";
      return 0;
    }

    const ExperimentConfig cfg = build_config(common);

    if (*joint) {
      WorkerPool pool;
      JointRunOptions opts;
      opts.pool = &pool;
      opts.resume_checkpoint = resume;
      const auto r = run_joint_training(cfg, opts);
      out << "design " << format_vector(r.design) << "\n"
          << "final_return " << format_double(r.final_return) << "\n"
          << "timesteps " << r.timesteps << "\n"
          << "eval_timesteps " << r.eval_timesteps << "\n";
      return 0;
    }
    if (*fixed) {
      WorkerPool pool;
      const auto setup = make_setup(cfg, &pool);
      const Eigen::VectorXd design =
          design_text.empty() ? resolved_default_design(cfg) : parse_vector(design_text, "--design");
      if (!setup.space.contains(design)) throw ConfigError("outside the design bounds", "--design");
      const auto budget = cfg.fixed_budget ? cfg.fixed_budget : cfg.schedule.total;
      const auto r = train_fixed_design(design, setup, budget, cfg.seed);
      write_text(std::filesystem::path(cfg.output_dir) / "fixed.csv",
                 "key,value\nfinal_return," + format_double(r.mean_return) + "\ntimesteps," +
                     std::to_string(r.timesteps) + "\n");
      out << "design " << format_vector(design) << "\n"
          << "final_return " << format_double(r.mean_return) << "\n"
          << "timesteps " << r.timesteps << "\n";
      return 0;
    }
    if (*rs) return run_search(cfg, false, out);
    if (*bo) return run_search(cfg, true, out);
    if (*oracle) return run_oracle(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace nlimb
