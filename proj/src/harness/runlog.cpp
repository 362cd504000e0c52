#include "nlimb/harness/runlog.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlimb/errors.hpp"
#include "nlimb/harness/config.hpp"

namespace nlimb {
namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

void RunLog::append(IterationRecord record) {
  if (!iterations.empty() && record.timesteps <= iterations.back().timesteps)
    throw ContractError("RunLog: cumulative timesteps must strictly increase");
  iterations.push_back(std::move(record));
}

void RunLog::append(HistogramRecord record) {
  if (static_cast<std::size_t>(record.designs.cols()) != record.returns.size())
    throw ShapeError("RunLog: one return per histogram design required");
  histograms.push_back(std::move(record));
}

std::string RunLog::iterations_csv() const {
  std::string s =
      "iteration,timesteps,eval_timesteps,mean_return,min_return,max_return,"
      "active_components,design_updated,pruned,finalized,approx_kl,entropy,"
      "value_loss";
  for (int k = 0; k < num_components; ++k) {
    s += ",active_" + std::to_string(k);
    for (const auto& n : design_names) s += ",mean_" + std::to_string(k) + "_" + n;
    for (const auto& n : design_names) s += ",log_var_" + std::to_string(k) + "_" + n;
  }
  s += '\n';
  for (const auto& r : iterations) {
    s += std::to_string(r.iteration) + "," + std::to_string(r.timesteps) + "," +
         std::to_string(r.eval_timesteps) + "," + format_double(r.mean_return) + "," +
         format_double(r.min_return) + "," + format_double(r.max_return) + "," +
         std::to_string(r.active_components) + "," + (r.design_updated ? "1" : "0") +
         "," + (r.pruned ? "1" : "0") + "," + (r.finalized ? "1" : "0") + "," +
         format_double(r.approx_kl) + "," + format_double(r.entropy) + "," +
         format_double(r.value_loss);
    for (std::size_t k = 0; k < r.components.size(); ++k) {
      s += r.active[k] ? ",1" : ",0";
      for (double m : r.components[k].mean) s += "," + format_double(m);
      for (double v : r.components[k].log_var) s += "," + format_double(v);
    }
    s += '\n';
  }
  return s;
}

std::string RunLog::histograms_csv() const {
  std::string s = "timestep,sample_index";
  for (const auto& n : design_names) s += "," + n;
  s += ",return\n";
  for (const auto& h : histograms) {
    for (Eigen::Index j = 0; j < h.designs.cols(); ++j) {
      s += std::to_string(h.timesteps) + "," + std::to_string(j);
      for (Eigen::Index d = 0; d < h.designs.rows(); ++d)
        s += "," + format_double(h.designs(d, j));
      s += "," + format_double(h.returns[static_cast<std::size_t>(j)]) + "\n";
    }
  }
  return s;
}

void RunLog::write(const std::string& directory) const {
  std::filesystem::create_directories(directory);
  write_file(std::filesystem::path(directory) / kRunLogFile, iterations_csv());
  write_file(std::filesystem::path(directory) / kHistogramFile, histograms_csv());
}

RunLog parse_runlog_csv(const std::string& text) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("run log is empty");
  const auto header = split(line);
  constexpr std::size_t kFixed = 13;
  if (header.size() < kFixed || header[0] != "iteration")
    throw LoadError("run log header not recognized");
  RunLog log;
  for (std::size_t i = kFixed; i < header.size(); ++i)
    if (header[i].rfind("active_", 0) == 0) ++log.num_components;
  if (log.num_components > 0) {
    for (std::size_t i = kFixed + 1; i < header.size(); ++i) {
      if (header[i].rfind("mean_0_", 0) != 0) break;
      log.design_names.push_back(header[i].substr(7));
    }
  }
  const std::size_t dim = log.design_names.size();
  const std::size_t width = kFixed + static_cast<std::size_t>(log.num_components) * (1 + 2 * dim);
  if (header.size() != width) throw LoadError("run log header has unexpected width");

  auto num = [](const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw LoadError("run log: bad number '" + s + "'");
    return v;
  };
  auto integer = [](const std::string& s) {
    std::int64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw LoadError("run log: bad integer '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != width) throw LoadError("run log row has unexpected width");
    IterationRecord r;
    r.iteration = integer(c[0]);
    r.timesteps = integer(c[1]);
    r.eval_timesteps = integer(c[2]);
    r.mean_return = num(c[3]);
    r.min_return = num(c[4]);
    r.max_return = num(c[5]);
    r.active_components = static_cast<int>(integer(c[6]));
    r.design_updated = c[7] == "1";
    r.pruned = c[8] == "1";
    r.finalized = c[9] == "1";
    r.approx_kl = num(c[10]);
    r.entropy = num(c[11]);
    r.value_loss = num(c[12]);
    std::size_t i = kFixed;
    for (int k = 0; k < log.num_components; ++k) {
      r.active.push_back(c[i++] == "1");
      GmmComponent comp;
      comp.mean.resize(static_cast<Eigen::Index>(dim));
      comp.log_var.resize(static_cast<Eigen::Index>(dim));
      for (std::size_t d = 0; d < dim; ++d) comp.mean[static_cast<Eigen::Index>(d)] = num(c[i++]);
      for (std::size_t d = 0; d < dim; ++d) comp.log_var[static_cast<Eigen::Index>(d)] = num(c[i++]);
      r.components.push_back(std::move(comp));
    }
    try {
      log.append(std::move(r));
    } catch (const ContractError& e) {
      throw LoadError(std::string("run log: ") + e.what());
    }
  }
  return log;
}

std::string report_csv(const RunLog& log) {
  std::string s = "timesteps,total_timesteps,mean_return,min_return,max_return,active_components";
  for (const auto& n : log.design_names) s += ",design_mean_" + n + ",design_std_" + n;
  s += '\n';
  for (const auto& r : log.iterations) {
    s += std::to_string(r.timesteps) + "," + std::to_string(r.timesteps + r.eval_timesteps) +
         "," + format_double(r.mean_return) + "," + format_double(r.min_return) + "," +
         format_double(r.max_return) + "," + std::to_string(r.active_components);
    // Moments of the uniform mixture over active components.
    const auto dim = log.design_names.size();
    for (std::size_t d = 0; d < dim; ++d) {
      double m1 = 0.0, m2 = 0.0;
      int count = 0;
      for (std::size_t k = 0; k < r.components.size(); ++k) {
        if (!r.active[k]) continue;
        const double mu = r.components[k].mean[static_cast<Eigen::Index>(d)];
        const double var = std::exp(r.components[k].log_var[static_cast<Eigen::Index>(d)]);
        m1 += mu;
        m2 += var + mu * mu;
        ++count;
      }
      if (count > 0) {
        m1 /= count;
        m2 /= count;
      }
      s += "," + format_double(m1) + "," + format_double(std::sqrt(std::max(0.0, m2 - m1 * m1)));
    }
    s += '\n';
  }
  return s;
}

}  // namespace nlimb
