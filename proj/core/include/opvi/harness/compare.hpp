#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "opvi/core.hpp"

namespace opvi {

struct MetricStat {
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  ///< sample standard deviation; 0 for a single run
  std::size_t count = 0;
};

struct RunGroup {
  std::string label;
  std::string config_key;  ///< config echo without seed and output_dir
  std::vector<std::string> runs;
  std::vector<MetricStat> metrics;
};

struct Comparison {
  std::size_t horizon = 0;
  std::vector<RunGroup> groups;

  /// One line per group: label, run count, then "metric mean ± sd" cells.
  [[nodiscard]] std::string table() const;
};

struct LabelledTrace {
  std::string name;        ///< run identifier shown in errors
  std::string config_key;  ///< runs with equal keys are pooled
  std::vector<RoundTrace> trace;
};

/// Final-row statistics per group. Empty input or a horizon mismatch is a ConfigError.
Comparison compare_traces(const std::vector<LabelledTrace>& runs);

/// Accepts trace.csv files or run directories; groups by the sibling config.txt.
Comparison compare_runs(std::span<const std::filesystem::path> paths);

std::string mean_sd(double mean, double sd);

}  // namespace opvi
