#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

#include "opvi/models.hpp"

namespace opvi {

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(rows[i]));
    out.targets(static_cast<Eigen::Index>(i)) = ds.targets(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}
}  // namespace

Dataset parse_csv_dataset(const std::string& text, BnnTask task) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_number(fields[i], values[i]);
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = fields.size();  // header
        continue;
      }
      throw ConfigError("CSV line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw ConfigError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " fields, found " + std::to_string(fields.size()));
    }
    if (task == BnnTask::classification) {
      const double label = values.back();
      if (label < 0.0 || label != std::floor(label)) {
        throw ConfigError("CSV line " + std::to_string(line_no) + ": class label must be a non-negative integer");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ConfigError("CSV dataset has no data rows");
  if (width < 2) throw ConfigError("CSV dataset needs at least one feature and a target");
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  ds.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    ds.targets(static_cast<Eigen::Index>(i)) = rows[i].back();
  }
  return ds;
}

Dataset load_csv_dataset(const std::filesystem::path& path, BnnTask task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv_dataset(buf.str(), task);
}

Dataset synthetic_regression(std::size_t n, std::uint64_t seed, double noise_sd) {
  if (n < 1) throw ConfigError("synthetic_regression needs n >= 1");
  const RngStream rng(seed);
  auto eng = rng.engine(RngRole::data, 0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sd);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 8);
  ds.targets.resize(static_cast<Eigen::Index>(n));
  const double pi = std::numbers::pi;
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    auto x = ds.features.row(i);
    for (Eigen::Index j = 0; j < 8; ++j) x(j) = unit(eng);
    const double f = 0.6 * std::sin(pi * x(0) * x(1)) + 0.8 * (x(2) - 0.5) * (x(2) - 0.5) +
                     0.4 * x(3) + 0.2 * x(4) + 0.25 * std::cos(2.0 * pi * x(5)) +
                     0.3 * x(6) * x(7);
    ds.targets(i) = f + noise(eng);
  }
  return ds;
}

Dataset synthetic_classification(std::size_t n, std::size_t n_features, std::size_t n_classes,
                                 std::uint64_t seed) {
  if (n < 1 || n_features < 1 || n_classes < 2) {
    throw ConfigError("synthetic_classification needs n >= 1, features >= 1, classes >= 2");
  }
  const RngStream rng(seed);
  auto eng = rng.engine(RngRole::data, 0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n_classes - 1);
  ParticleMatrix centres(static_cast<Eigen::Index>(n_classes), static_cast<Eigen::Index>(n_features));
  for (Eigen::Index c = 0; c < centres.rows(); ++c) {
    for (Eigen::Index j = 0; j < centres.cols(); ++j) centres(c, j) = 2.0 * normal(eng);
  }
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_features));
  ds.targets.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(pick(eng));
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = centres(c, j) + normal(eng);
    ds.targets(i) = static_cast<double>(c);
  }
  return ds;
}

DatasetSplit split_dataset(const Dataset& ds, double test_fraction, const RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  if (ds.size() < 2) throw ConfigError("cannot split fewer than two rows");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto eng = rng.engine(RngRole::split, 0, 0);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(eng)]);
  }
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, ds.size() - 1);
  const std::span<const std::size_t> all(order);
  return {take_rows(ds, all.subspan(n_test)), take_rows(ds, all.first(n_test))};
}

Standardizer Standardizer::fit(const Dataset& train, BnnTask task) {
  Standardizer s;
  s.feature_mean = train.features.colwise().mean();
  const double n = static_cast<double>(train.size());
  s.feature_scale = ((train.features.rowwise() - s.feature_mean).array().square().colwise().sum() / n)
                        .sqrt()
                        .matrix();
  for (auto& v : s.feature_scale) {
    if (!(v > 1e-12)) v = 1.0;
  }
  if (task == BnnTask::regression) {
    s.target_mean = train.targets.mean();
    const double sd = std::sqrt((train.targets.array() - s.target_mean).square().sum() / n);
    s.target_scale = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Dataset Standardizer::apply(const Dataset& ds, BnnTask task) const {
  Dataset out;
  out.features = ((ds.features.rowwise() - feature_mean).array().rowwise() / feature_scale.array()).matrix();
  out.targets = task == BnnTask::regression ? Vector((ds.targets.array() - target_mean) / target_scale)
                                            : ds.targets;
  return out;
}

}  // namespace opvi
