#include "nlimb/baselines/search.hpp"

#include <algorithm>
#include <limits>

#include "nlimb/baselines/gp.hpp"
#include "nlimb/errors.hpp"
#include "nlimb/random.hpp"

namespace nlimb {
namespace {

enum Stream : std::uint64_t {
  kInit = 1,
  kRollout = 2,
  kUpdate = 3,
  kEval = 4,
  kCandidates = 5,
  kCandidateSeed = 6,
  kAcquisition = 7,
};

Eigen::VectorXd uniform_design(const DesignSpace& space, Rng& rng) {
  Eigen::VectorXd u(space.dimension());
  for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = uniform(rng, 0.0, 1.0);
  return space.from_unit(u);
}

void record(SearchResult& result, const Eigen::VectorXd& design,
            CandidateOutcome&& outcome) {
  result.ledger.charge(outcome.cost);
  result.eval_timesteps += outcome.eval_cost;
  result.candidates.push_back({design, outcome.score, outcome.cost});
  if (result.candidates.size() == 1 || outcome.score > result.best_return) {
    result.best_return = outcome.score;
    result.best_design = design;
    result.best_policy = std::move(outcome.policy);
  }
}

void check_budgets(std::int64_t per_candidate, std::int64_t total) {
  if (per_candidate < 1) throw ConfigError("per-candidate budget must be >= 1");
  if (total < per_candidate)
    throw ConfigError("total budget must be at least the per-candidate budget");
}

}  // namespace

void BudgetLedger::charge(std::int64_t cost) {
  if (cost < 0) throw ContractError("BudgetLedger: negative cost");
  if (!can_afford(cost))
    throw ContractError("BudgetLedger: charge of " + std::to_string(cost) +
                        " exceeds remaining " + std::to_string(remaining()));
  consumed_ += cost;
  per_candidate_.push_back(cost);
}

FixedDesignResult train_fixed_design(const Eigen::VectorXd& design,
                                     const TrainingSetup& setup,
                                     std::int64_t budget, std::uint64_t seed) {
  if (!setup.space.contains(design))
    throw ContractError("train_fixed_design: design outside bounds");
  const std::int64_t per_iter = setup.timesteps_per_iteration();
  if (per_iter < 1) throw ConfigError("iteration must contain at least one step");
  if (budget < per_iter)
    throw ConfigError("budget " + std::to_string(budget) +
                          " is below one iteration (" + std::to_string(per_iter) +
                          " steps)",
                      "budget");

  Rng init_rng(derive_seed(seed, {kInit}));
  FixedDesignResult r;
  r.policy = init_policy(setup.state_dim, setup.space, setup.action_dim,
                         setup.policy_init, init_rng);
  auto optimizer = make_ppo_optimizer(r.policy);
  const std::vector<Eigen::VectorXd> designs(
      static_cast<std::size_t>(setup.designs_per_iteration), design);
  const std::int64_t iterations = budget / per_iter;
  for (std::int64_t it = 0; it < iterations; ++it) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < setup.designs_per_iteration; ++i)
      seeds.push_back(derive_seed(seed, {kRollout, static_cast<std::uint64_t>(it),
                                         static_cast<std::uint64_t>(i)}));
    ppo_iteration(r.policy, optimizer, setup, designs, seeds,
                  derive_seed(seed, {kUpdate, static_cast<std::uint64_t>(it)}));
    r.timesteps += per_iter;
  }
  const auto eval = evaluate_design(r.policy, setup.env_factory, design,
                                    setup.eval_episodes, derive_seed(seed, {kEval}));
  r.mean_return = eval.mean_return;
  r.eval_timesteps = eval.timesteps;
  return r;
}

CandidateEvaluator rl_candidate_evaluator(const TrainingSetup& setup,
                                          std::int64_t per_candidate,
                                          std::uint64_t seed) {
  return [&setup, per_candidate, seed](const Eigen::VectorXd& design, int index) {
    auto r = train_fixed_design(
        design, setup, per_candidate,
        derive_seed(seed, {kCandidateSeed, static_cast<std::uint64_t>(index)}));
    CandidateOutcome out;
    out.score = r.mean_return;
    out.cost = r.timesteps;
    out.eval_cost = r.eval_timesteps;
    out.policy = std::move(r.policy);
    return out;
  };
}

SearchResult random_search(const DesignSpace& space,
                           const CandidateEvaluator& evaluate,
                           std::int64_t per_candidate, std::int64_t total,
                           std::uint64_t seed) {
  check_budgets(per_candidate, total);
  SearchResult result;
  result.ledger = BudgetLedger(total);
  Rng rng(derive_seed(seed, {kCandidates}));
  int index = 0;
  while (result.ledger.can_afford(per_candidate)) {
    const Eigen::VectorXd design = uniform_design(space, rng);
    record(result, design, evaluate(design, index++));
  }
  return result;
}

SearchResult bayesopt_search(const DesignSpace& space,
                             const CandidateEvaluator& evaluate,
                             std::int64_t per_candidate, std::int64_t total,
                             std::uint64_t seed, const BayesOptOptions& options) {
  check_budgets(per_candidate, total);
  if (total < 2 * per_candidate)
    throw ConfigError("bayesopt needs a budget for at least two candidates");
  SearchResult result;
  result.ledger = BudgetLedger(total);
  Rng rng(derive_seed(seed, {kCandidates}));
  int index = 0;

  for (int i = 0; i < std::max(1, options.initial_designs) &&
                  result.ledger.can_afford(per_candidate);
       ++i) {
    const Eigen::VectorXd design = uniform_design(space, rng);
    record(result, design, evaluate(design, index++));
  }

  const auto dim = space.dimension();
  while (result.ledger.can_afford(per_candidate)) {
    const auto n = static_cast<Eigen::Index>(result.candidates.size());
    Eigen::MatrixXd x(dim, n);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.col(i) = space.to_unit(result.candidates[static_cast<std::size_t>(i)].design);
      y[i] = result.candidates[static_cast<std::size_t>(i)].score;
    }
    const GpModel gp = gp_fit_auto(x, y);
    const double best = y.maxCoeff();

    Rng acq(derive_seed(seed, {kAcquisition, static_cast<std::uint64_t>(index)}));
    std::vector<std::pair<double, Eigen::VectorXd>> pool;
    for (int s = 0; s < options.acquisition_samples; ++s) {
      Eigen::VectorXd u(dim);
      for (Eigen::Index d = 0; d < dim; ++d) u[d] = uniform(acq, 0.0, 1.0);
      pool.emplace_back(expected_improvement(gp, u, best), std::move(u));
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    // Compass-search refinement from the best few samples, kept in the box.
    auto chosen = pool.front();
    const auto starts = std::min<std::size_t>(
        pool.size(), static_cast<std::size_t>(std::max(0, options.local_refine_starts)));
    for (std::size_t s = 0; s < starts; ++s) {
      auto cur = pool[s];
      for (double step = 0.05; step > 1e-4; step *= 0.5) {
        bool improved = true;
        while (improved) {
          improved = false;
          for (Eigen::Index d = 0; d < dim; ++d) {
            for (double dir : {1.0, -1.0}) {
              Eigen::VectorXd q = cur.second;
              q[d] = std::clamp(q[d] + dir * step, 0.0, 1.0);
              const double ei = expected_improvement(gp, q, best);
              if (ei > cur.first) {
                cur = {ei, q};
                improved = true;
              }
            }
          }
        }
      }
      if (cur.first > chosen.first) chosen = cur;
    }
    const Eigen::VectorXd design = space.clamp(space.from_unit(chosen.second));
    record(result, design, evaluate(design, index++));
  }
  return result;
}

}  // namespace nlimb
