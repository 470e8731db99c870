#include "opvi/harness/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace opvi {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void put(std::string& s, const std::optional<double>& v) {
  s += ',';
  if (v) s += format_double(*v);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line);
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto& l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

std::string trace_row(const RoundTrace& r) {
  std::string s = std::to_string(r.t) + ',' + std::to_string(r.batch_size) + ',' + format_double(r.eta) +
                  ',' + format_double(r.alpha);
  put(s, r.grad_error);
  put(s, r.objective);
  put(s, r.regret_cum);
  put(s, r.energy_dist);
  put(s, r.rmse);
  put(s, r.test_ll);
  put(s, r.wallclock_ms);
  return s;
}

std::string trace_csv(const std::vector<RoundTrace>& rows) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : rows) out += trace_row(r) + '\n';
  return out;
}

void write_trace(const std::filesystem::path& path, const std::vector<RoundTrace>& rows) {
  write_text_file(path, trace_csv(rows));
}

std::vector<RoundTrace> parse_trace(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kTraceHeader) throw ConfigError("not a trace file: header mismatch");
  std::vector<RoundTrace> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 11) throw ConfigError("trace line " + std::to_string(i + 1) + ": expected 11 fields");
    RoundTrace r;
    r.t = static_cast<std::size_t>(parse_double(f[0], i + 1));
    r.batch_size = static_cast<std::size_t>(parse_double(f[1], i + 1));
    r.eta = parse_double(f[2], i + 1);
    r.alpha = parse_double(f[3], i + 1);
    r.grad_error = parse_optional(f[4], i + 1);
    r.objective = parse_optional(f[5], i + 1);
    r.regret_cum = parse_optional(f[6], i + 1);
    r.energy_dist = parse_optional(f[7], i + 1);
    r.rmse = parse_optional(f[8], i + 1);
    r.test_ll = parse_optional(f[9], i + 1);
    r.wallclock_ms = parse_optional(f[10], i + 1);
    rows.push_back(r);
  }
  return rows;
}

std::vector<RoundTrace> read_trace(const std::filesystem::path& path) {
  try {
    return parse_trace(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_ensemble(const std::filesystem::path& path, const ParticleMatrix& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out += ',';
      out += format_double(x(i, j));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

ParticleMatrix read_ensemble(const std::filesystem::path& path) {
  const auto lines = lines_of(read_text_file(path));
  if (lines.empty()) throw ConfigError(path.string() + ": empty ensemble file");
  const auto width = split(lines.front(), ',').size();
  ParticleMatrix x(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != width) throw ConfigError(path.string() + ": ragged ensemble file");
    for (std::size_t j = 0; j < width; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(f[j], i + 1);
    }
  }
  return x;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace opvi
