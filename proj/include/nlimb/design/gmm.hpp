#pragma once

// Uniform-weight mixture of diagonal Gaussians over a bounded design space.
//
// Mixing weights are never learned: they are uniform over the components
// still marked active, and pruning only ever clears bits in the mask.
// Samples are drawn from the unbounded mixture and clamped to the box for use
// in an environment; score-function gradients are taken at the raw draw.

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nlimb/design/design_space.hpp"
#include "nlimb/random.hpp"

namespace nlimb {

struct GmmComponent {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;
};

struct GmmState {
  DesignSpace space;
  std::vector<GmmComponent> components;
  std::vector<bool> active;

  Eigen::Index dimension() const { return space.dimension(); }
  int num_components() const { return static_cast<int>(components.size()); }
  int active_count() const;
  std::vector<int> active_indices() const;
  // Per-dimension log-variance floor, log(1e-6 * range^2).
  Eigen::VectorXd log_var_floor() const;

  void validate() const;
};

struct DesignSample {
  Eigen::VectorXd raw;
  Eigen::VectorXd clamped;
  int component_id = -1;
};

struct GmmGradient {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::VectorXd> log_var;
};

enum class ReturnBaseline { kNone, kMeanReturn };

ReturnBaseline parse_return_baseline(std::string_view name);
std::string_view to_string(ReturnBaseline baseline);

struct DistributionStep {
  double mean_lr = 0.05;
  double log_var_lr = 0.05;
  ReturnBaseline baseline = ReturnBaseline::kMeanReturn;
};

// Random means inside the box, std = (upper - lower) / 2 on every dimension.
// `num_components` must be a power of two so repeated halving ends at one.
GmmState init_gmm(const DesignSpace& space, int num_components, Rng& rng);

DesignSample sample_design(const GmmState& gmm, Rng& rng);

// Log of the uniform mixture density over active components.
double gmm_log_prob(const GmmState& gmm, const Eigen::VectorXd& x);

// Gradient of gmm_log_prob with respect to every component's mean and
// log-variance; inactive components get zero entries.
GmmGradient gmm_grad_log_prob(const GmmState& gmm, const Eigen::VectorXd& x);

// One ascent step along (1/n) sum_i grad log p(raw_i) * (R_i - b).
GmmState update_distribution(const GmmState& gmm,
                             const std::vector<DesignSample>& samples,
                             const std::vector<double>& returns,
                             const DistributionStep& step);

inline GmmState update_distribution(const GmmState& gmm,
                                    const std::vector<DesignSample>& samples,
                                    const std::vector<double>& returns,
                                    double lr, ReturnBaseline baseline) {
  return update_distribution(gmm, samples, returns,
                             DistributionStep{lr, lr, baseline});
}

// Deactivates the lower-scoring half of the active components. Ties go
// against the lower component index. `component_scores` is indexed by
// component; entries for inactive components are ignored.
GmmState prune_by_scores(const GmmState& gmm,
                         const std::vector<double>& component_scores);

// Draws `samples_per_component` designs from each active component, averages
// `evaluator` over them and prunes by the averages.
GmmState prune_components(
    const GmmState& gmm,
    const std::function<double(const DesignSample&)>& evaluator,
    int samples_per_component, Rng& rng);

// Draws from one specific component.
DesignSample sample_component(const GmmState& gmm, int component, Rng& rng);

// Clamped mean of the single active component, or with several active
// components the clamped active mean of highest mixture density.
Eigen::VectorXd gmm_mode(const GmmState& gmm);

}  // namespace nlimb
