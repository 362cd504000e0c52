#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlimb/design/gmm.hpp"

namespace nlimb {

struct IterationRecord {
  std::int64_t iteration = 0;
  std::int64_t timesteps = 0;       // cumulative training steps
  std::int64_t eval_timesteps = 0;  // cumulative pruning/histogram steps
  double mean_return = 0.0;         // over the iteration's sampled designs
  double min_return = 0.0;
  double max_return = 0.0;
  int active_components = 0;
  bool design_updated = false;
  bool pruned = false;
  bool finalized = false;
  double approx_kl = 0.0;
  double entropy = 0.0;
  double value_loss = 0.0;
  std::vector<GmmComponent> components;  // after this iteration's updates
  std::vector<bool> active;
};

struct HistogramRecord {
  std::int64_t timesteps = 0;
  Eigen::MatrixXd designs;  // dim x samples
  std::vector<double> returns;
};

struct RunLog {
  std::vector<std::string> design_names;
  int num_components = 0;
  std::vector<IterationRecord> iterations;
  std::vector<HistogramRecord> histograms;

  // Throws ContractError if timesteps do not strictly increase.
  void append(IterationRecord record);
  void append(HistogramRecord record);

  std::string iterations_csv() const;
  // Columns: timestep, sample_index, one per design parameter, return.
  std::string histograms_csv() const;
  void write(const std::string& directory) const;
};

inline constexpr const char* kRunLogFile = "runlog.csv";
inline constexpr const char* kHistogramFile = "histograms.csv";

// Reads back iterations_csv() output. Throws LoadError on malformed input.
RunLog parse_runlog_csv(const std::string& text);

// Plot-ready summary derived from a run log: one row per iteration with the
// return statistics and the mean and std of the sampled-design distribution
// per parameter, computed over active components.
std::string report_csv(const RunLog& log);

}  // namespace nlimb
