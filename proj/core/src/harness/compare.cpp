#include "opvi/harness/compare.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "opvi/harness/trace_io.hpp"

namespace opvi {

namespace {

using Getter = std::optional<double> RoundTrace::*;

const std::vector<std::pair<std::string, Getter>>& metric_columns() {
  static const std::vector<std::pair<std::string, Getter>> cols = {
      {"grad_error", &RoundTrace::grad_error}, {"objective", &RoundTrace::objective},
      {"regret_cum", &RoundTrace::regret_cum}, {"energy_dist", &RoundTrace::energy_dist},
      {"rmse", &RoundTrace::rmse},             {"test_ll", &RoundTrace::test_ll}};
  return cols;
}

std::string strip_run_keys(const std::string& config) {
  std::istringstream in(config);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (line.rfind("seed =", 0) == 0 || line.rfind("output_dir =", 0) == 0) continue;
    out += line + '\n';
  }
  return out;
}

std::string value_of(const std::string& config, const std::string& key) {
  std::istringstream in(config);
  std::string line;
  const std::string prefix = key + " = ";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return {};
}

std::string label_for(const std::string& key, std::size_t index) {
  std::string label;
  for (const char* k : {"model", "sampler", "batch", "batch_size", "batch_rho", "step_size"}) {
    const std::string v = value_of(key, k);
    if (!v.empty()) label += (label.empty() ? "" : " ") + std::string(k) + "=" + v;
  }
  return label.empty() ? "group" + std::to_string(index + 1) : label;
}

}  // namespace

std::string mean_sd(double mean, double sd) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4g \xC2\xB1 %.2g", mean, sd);
  return buf;
}

Comparison compare_traces(const std::vector<LabelledTrace>& runs) {
  if (runs.empty()) throw ConfigError("compare needs at least one trace");
  Comparison cmp;
  cmp.horizon = runs.front().trace.size();
  for (const auto& r : runs) {
    if (r.trace.empty()) throw ConfigError(r.name + ": trace has no rows");
    if (r.trace.size() != cmp.horizon || r.trace.back().t != runs.front().trace.back().t) {
      throw ConfigError("horizon mismatch: " + r.name + " has " + std::to_string(r.trace.size()) +
                        " rounds, expected " + std::to_string(cmp.horizon));
    }
  }
  std::map<std::string, std::size_t> index;
  for (const auto& r : runs) {
    auto [it, fresh] = index.emplace(r.config_key, cmp.groups.size());
    if (fresh) {
      cmp.groups.push_back({label_for(r.config_key, cmp.groups.size()), r.config_key, {}, {}});
    }
    cmp.groups[it->second].runs.push_back(r.name);
  }
  for (auto& g : cmp.groups) {
    for (const auto& [name, member] : metric_columns()) {
      std::vector<double> values;
      for (const auto& r : runs) {
        if (r.config_key != g.config_key) continue;
        if (const auto& v = r.trace.back().*member; v) values.push_back(*v);
      }
      if (values.empty()) continue;
      MetricStat s;
      s.metric = name;
      s.count = values.size();
      for (double v : values) s.mean += v;
      s.mean /= static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
      g.metrics.push_back(s);
    }
  }
  return cmp;
}

Comparison compare_runs(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw ConfigError("compare needs at least one trace");
  std::vector<LabelledTrace> runs;
  for (const auto& p : paths) {
    const auto trace_path = std::filesystem::is_directory(p) ? p / "trace.csv" : p;
    LabelledTrace lt;
    lt.name = trace_path.string();
    lt.trace = read_trace(trace_path);
    const auto config_path = trace_path.parent_path() / "config.txt";
    lt.config_key = std::filesystem::exists(config_path) ? strip_run_keys(read_text_file(config_path)) : "";
    runs.push_back(std::move(lt));
  }
  return compare_traces(runs);
}

std::string Comparison::table() const {
  std::ostringstream o;
  o << "horizon " << horizon << '\n';
  for (const auto& g : groups) {
    o << g.label << " | runs " << g.runs.size();
    for (const auto& m : g.metrics) o << " | " << m.metric << " " << mean_sd(m.mean, m.sd);
    o << '\n';
  }
  return o.str();
}

}  // namespace opvi
