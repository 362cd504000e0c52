#include "nlimb/design/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nlimb/errors.hpp"
#include "nlimb/numerics/gaussian.hpp"

namespace nlimb {
namespace {

double component_log_prob(const GmmComponent& c, const Eigen::VectorXd& x) {
  return gaussian_log_prob(c.mean, (0.5 * c.log_var).eval(), x);
}

void check_point(const GmmState& gmm, const Eigen::VectorXd& x) {
  if (x.size() != gmm.dimension())
    throw ShapeError("design vector has wrong dimension");
  if (!x.allFinite()) throw NumericError("design vector is not finite");
}

// Active component log densities and their log-sum-exp.
struct Responsibilities {
  std::vector<int> index;
  Eigen::VectorXd log_prob;
  double log_sum = 0.0;
};

Responsibilities responsibilities(const GmmState& gmm,
                                  const Eigen::VectorXd& x) {
  Responsibilities r;
  r.index = gmm.active_indices();
  r.log_prob.resize(static_cast<Eigen::Index>(r.index.size()));
  for (std::size_t i = 0; i < r.index.size(); ++i)
    r.log_prob[static_cast<Eigen::Index>(i)] =
        component_log_prob(gmm.components[r.index[i]], x);
  const double peak = r.log_prob.maxCoeff();
  r.log_sum = peak + std::log((r.log_prob.array() - peak).exp().sum());
  return r;
}

}  // namespace

int GmmState::active_count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

std::vector<int> GmmState::active_indices() const {
  std::vector<int> out;
  for (int k = 0; k < num_components(); ++k)
    if (active[k]) out.push_back(k);
  return out;
}

Eigen::VectorXd GmmState::log_var_floor() const {
  return (1e-6 * space.range().array().square()).log().matrix();
}

void GmmState::validate() const {
  if (components.empty() || active.size() != components.size())
    throw ContractError("GMM component list and mask disagree");
  if (active_count() < 1) throw ContractError("GMM has no active component");
  for (const auto& c : components)
    if (c.mean.size() != dimension() || c.log_var.size() != dimension())
      throw ShapeError("GMM component has wrong dimension");
}

ReturnBaseline parse_return_baseline(std::string_view name) {
  if (name == "none") return ReturnBaseline::kNone;
  if (name == "mean_return") return ReturnBaseline::kMeanReturn;
  throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

std::string_view to_string(ReturnBaseline baseline) {
  return baseline == ReturnBaseline::kNone ? "none" : "mean_return";
}

GmmState init_gmm(const DesignSpace& space, int num_components, Rng& rng) {
  if (num_components < 1 || (num_components & (num_components - 1)) != 0)
    throw ConfigError("component count must be a power of two, got " +
                          std::to_string(num_components),
                      "gmm.components");
  if (space.dimension() < 1) throw ConfigError("design space is empty");
  GmmState gmm;
  gmm.space = space;
  const Eigen::VectorXd log_var =
      (0.5 * space.range()).array().square().log().matrix();
  for (int k = 0; k < num_components; ++k) {
    Eigen::VectorXd mean(space.dimension());
    for (Eigen::Index d = 0; d < space.dimension(); ++d)
      mean[d] = uniform(rng, space.lower()[d], space.upper()[d]);
    gmm.components.push_back({std::move(mean), log_var});
  }
  gmm.active.assign(num_components, true);
  return gmm;
}

DesignSample sample_component(const GmmState& gmm, int component, Rng& rng) {
  const auto& c = gmm.components.at(component);
  DesignSample s;
  s.component_id = component;
  s.raw = c.mean + ((0.5 * c.log_var).array().exp() *
                    standard_normal_vector(rng, gmm.dimension()).array())
                       .matrix();
  s.clamped = gmm.space.clamp(s.raw);
  return s;
}

DesignSample sample_design(const GmmState& gmm, Rng& rng) {
  const auto idx = gmm.active_indices();
  if (idx.empty()) throw ContractError("sample_design: no active component");
  std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
  return sample_component(gmm, idx[pick(rng)], rng);
}

double gmm_log_prob(const GmmState& gmm, const Eigen::VectorXd& x) {
  check_point(gmm, x);
  const auto r = responsibilities(gmm, x);
  return r.log_sum - std::log(static_cast<double>(r.index.size()));
}

GmmGradient gmm_grad_log_prob(const GmmState& gmm, const Eigen::VectorXd& x) {
  check_point(gmm, x);
  GmmGradient g;
  g.mean.assign(gmm.components.size(), Eigen::VectorXd::Zero(gmm.dimension()));
  g.log_var = g.mean;
  const auto r = responsibilities(gmm, x);
  for (std::size_t i = 0; i < r.index.size(); ++i) {
    const int k = r.index[i];
    const auto& c = gmm.components[k];
    const double w =
        std::exp(r.log_prob[static_cast<Eigen::Index>(i)] - r.log_sum);
    const Eigen::ArrayXd inv_var = (-c.log_var.array()).exp();
    const Eigen::ArrayXd diff = (x - c.mean).array();
    g.mean[k] = (w * diff * inv_var).matrix();
    g.log_var[k] = (w * 0.5 * (diff.square() * inv_var - 1.0)).matrix();
  }
  return g;
}

GmmState update_distribution(const GmmState& gmm,
                             const std::vector<DesignSample>& samples,
                             const std::vector<double>& returns,
                             const DistributionStep& step) {
  if (samples.empty())
    throw ContractError("update_distribution: empty sample list");
  if (samples.size() != returns.size())
    throw ContractError("update_distribution: samples and returns differ");
  for (const auto& s : samples)
    if (s.component_id < 0 || s.component_id >= gmm.num_components() ||
        !gmm.active[s.component_id])
      throw ContractError("update_distribution: sample from inactive component");

  double baseline = 0.0;
  if (step.baseline == ReturnBaseline::kMeanReturn)
    baseline = std::accumulate(returns.begin(), returns.end(), 0.0) /
               static_cast<double>(returns.size());

  const auto n = static_cast<double>(samples.size());
  GmmGradient total;
  total.mean.assign(gmm.components.size(),
                    Eigen::VectorXd::Zero(gmm.dimension()));
  total.log_var = total.mean;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double weight = returns[i] - baseline;
    if (weight == 0.0) continue;
    const auto g = gmm_grad_log_prob(gmm, samples[i].raw);
    for (std::size_t k = 0; k < g.mean.size(); ++k) {
      total.mean[k] += weight / n * g.mean[k];
      total.log_var[k] += weight / n * g.log_var[k];
    }
  }

  GmmState next = gmm;
  const Eigen::VectorXd floor = gmm.log_var_floor();
  for (int k : gmm.active_indices()) {
    auto& c = next.components[k];
    c.mean = gmm.space.clamp(c.mean + step.mean_lr * total.mean[k]);
    c.log_var = (c.log_var + step.log_var_lr * total.log_var[k]).cwiseMax(floor);
    if (!c.mean.allFinite() || !c.log_var.allFinite())
      throw NumericError("update_distribution produced non-finite parameters");
  }
  return next;
}

GmmState prune_by_scores(const GmmState& gmm,
                         const std::vector<double>& component_scores) {
  auto idx = gmm.active_indices();
  if (idx.size() < 2 || idx.size() % 2 != 0)
    throw ContractError("prune_components needs an even active count >= 2");
  if (component_scores.size() != gmm.components.size())
    throw ContractError("prune_components: one score per component required");
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return component_scores[a] < component_scores[b];
  });
  GmmState next = gmm;
  for (std::size_t i = 0; i < idx.size() / 2; ++i) next.active[idx[i]] = false;
  return next;
}

GmmState prune_components(
    const GmmState& gmm,
    const std::function<double(const DesignSample&)>& evaluator,
    int samples_per_component, Rng& rng) {
  if (samples_per_component < 1)
    throw ContractError("prune_components: samples_per_component must be >= 1");
  const auto idx = gmm.active_indices();
  if (idx.size() < 2 || idx.size() % 2 != 0)
    throw ContractError("prune_components needs an even active count >= 2");
  std::vector<double> scores(gmm.components.size(),
                             std::numeric_limits<double>::quiet_NaN());
  for (int k : idx) {
    double sum = 0.0;
    for (int j = 0; j < samples_per_component; ++j)
      sum += evaluator(sample_component(gmm, k, rng));
    scores[k] = sum / samples_per_component;
  }
  return prune_by_scores(gmm, scores);
}

Eigen::VectorXd gmm_mode(const GmmState& gmm) {
  const auto idx = gmm.active_indices();
  if (idx.empty()) throw ContractError("gmm_mode: no active component");
  int best = idx.front();
  if (idx.size() > 1) {
    double best_lp = -std::numeric_limits<double>::infinity();
    for (int k : idx) {
      const double lp = gmm_log_prob(gmm, gmm.components[k].mean);
      if (lp > best_lp) {
        best_lp = lp;
        best = k;
      }
    }
  }
  return gmm.space.clamp(gmm.components[best].mean);
}

}  // namespace nlimb
