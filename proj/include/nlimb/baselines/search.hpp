#pragma once

// Design-search baselines: a fixed hand-picked design, uniform random search,
// and Bayesian optimization. Each candidate design gets its own policy
// trained from scratch; every method is metered by a BudgetLedger.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nlimb/design/design_space.hpp"
#include "nlimb/rl/policy.hpp"
#include "nlimb/rl/training.hpp"

namespace nlimb {

class BudgetLedger {
 public:
  explicit BudgetLedger(std::int64_t allowed = 0) : allowed_(allowed) {}

  std::int64_t allowed() const { return allowed_; }
  std::int64_t consumed() const { return consumed_; }
  std::int64_t remaining() const { return allowed_ - consumed_; }
  const std::vector<std::int64_t>& per_candidate() const { return per_candidate_; }

  bool can_afford(std::int64_t cost) const { return cost <= remaining(); }
  // Records one candidate's cost; throws ContractError if it would overdraw.
  void charge(std::int64_t cost);

 private:
  std::int64_t allowed_;
  std::int64_t consumed_ = 0;
  std::vector<std::int64_t> per_candidate_;
};

struct FixedDesignResult {
  PolicyState policy;
  double mean_return = 0.0;
  std::int64_t timesteps = 0;       // training steps
  std::int64_t eval_timesteps = 0;  // evaluation steps, metered separately
};

// Trains a fresh policy on one design for as many whole iterations as the
// budget admits, then evaluates it over setup.eval_episodes episodes.
FixedDesignResult train_fixed_design(const Eigen::VectorXd& design,
                                     const TrainingSetup& setup,
                                     std::int64_t budget, std::uint64_t seed);

struct CandidateOutcome {
  double score = 0.0;
  std::int64_t cost = 0;
  std::int64_t eval_cost = 0;
  std::optional<PolicyState> policy;
};

struct CandidateRecord {
  Eigen::VectorXd design;
  double score = 0.0;
  std::int64_t cost = 0;
};

struct SearchResult {
  Eigen::VectorXd best_design;
  double best_return = 0.0;
  std::optional<PolicyState> best_policy;
  std::vector<CandidateRecord> candidates;
  BudgetLedger ledger;
  std::int64_t eval_timesteps = 0;
};

// Evaluates a candidate design; `index` is its position in the search.
using CandidateEvaluator =
    std::function<CandidateOutcome(const Eigen::VectorXd& design, int index)>;

// Uniform random candidates until the ledger cannot afford another
// `per_candidate` charge.
SearchResult random_search(const DesignSpace& space,
                           const CandidateEvaluator& evaluate,
                           std::int64_t per_candidate, std::int64_t total,
                           std::uint64_t seed);

struct BayesOptOptions {
  int initial_designs = 2;
  int acquisition_samples = 1024;
  int local_refine_starts = 5;
};

// Two uniform seeding candidates, then candidates maximizing expected
// improvement under a GP fitted to the scores so far.
SearchResult bayesopt_search(const DesignSpace& space,
                             const CandidateEvaluator& evaluate,
                             std::int64_t per_candidate, std::int64_t total,
                             std::uint64_t seed, const BayesOptOptions& options = {});

// Candidate evaluator that runs train_fixed_design with a per-candidate seed.
CandidateEvaluator rl_candidate_evaluator(const TrainingSetup& setup,
                                          std::int64_t per_candidate,
                                          std::uint64_t seed);

}  // namespace nlimb
