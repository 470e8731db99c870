#include "opvi/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace opvi {

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model", "n_data", "data_seed", "mixture_theta1", "mixture_theta2", "linreg_dim",
      "linreg_noise_var", "linreg_prior_var", "dataset", "bnn_hidden", "bnn_activation",
      "bnn_weight_prior_var", "bnn_classes", "bnn_features", "test_fraction",
      "sampler", "diffusion_scale", "likelihood_scaling", "projection_radius", "n_particles",
      "rounds", "seed",
      "batch", "batch_size", "batch_rho", "fitds", "stream", "likelihood_population",
      "prior_weight", "prior_weight_value", "step", "step_size", "step_decay",
      "kernel_bandwidth", "kernel_h",
      "init", "init_scale", "init_low", "init_high", "init_point",
      "diag_grad_error", "diag_objective", "diag_regret", "diag_energy", "diag_predictive",
      "diag_fpc", "metrics_every", "fpc_batch", "fpc_draws", "grid_resolution", "grid_window",
      "reference_size",
      "svg", "record_wallclock", "output_dir"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct RawEntry {
  std::string value;
  std::size_t line;
};

class RawConfig {
 public:
  explicit RawConfig(std::map<std::string, RawEntry> entries) : entries_(std::move(entries)) {}

  [[nodiscard]] const RawEntry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  [[noreturn]] static void fail(const std::string& key, const RawEntry& e, const std::string& why) {
    throw ConfigError("config line " + std::to_string(e.line) + ": '" + key + "' " + why);
  }

  template <class T>
  void number(const std::string& key, T& out) const {
    const RawEntry* e = find(key);
    if (e == nullptr) return;
    T value{};
    const char* begin = e->value.data();
    const char* end = begin + e->value.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) fail(key, *e, "expects a number, got '" + e->value + "'");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(value)) fail(key, *e, "must be finite");
    }
    out = value;
  }

  template <class T>
  void optional_number(const std::string& key, std::optional<T>& out) const {
    if (find(key) == nullptr) return;
    T v{};
    number(key, v);
    out = v;
  }

  void boolean(const std::string& key, bool& out) const {
    const RawEntry* e = find(key);
    if (e == nullptr) return;
    if (e->value == "true" || e->value == "1" || e->value == "yes") {
      out = true;
    } else if (e->value == "false" || e->value == "0" || e->value == "no") {
      out = false;
    } else {
      fail(key, *e, "expects true/false, got '" + e->value + "'");
    }
  }

  void text(const std::string& key, std::string& out) const {
    if (const RawEntry* e = find(key)) out = e->value;
  }

  std::vector<double> list(const std::string& key) const {
    const RawEntry* e = find(key);
    std::vector<double> out;
    if (e == nullptr) return out;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
        fail(key, *e, "expects a comma-separated list of numbers");
      }
      out.push_back(v);
    }
    return out;
  }

  template <class E>
  void choice(const std::string& key, E& out, const std::vector<std::pair<std::string, E>>& options) const {
    const RawEntry* e = find(key);
    if (e == nullptr) return;
    for (const auto& [name, value] : options) {
      if (name == e->value) {
        out = value;
        return;
      }
    }
    std::string names;
    for (const auto& [name, value] : options) names += (names.empty() ? "" : "|") + name;
    fail(key, *e, "must be one of " + names + ", got '" + e->value + "'");
  }

 private:
  std::map<std::string, RawEntry> entries_;
};

const std::vector<std::pair<std::string, ModelKind>> kModels = {
    {"mixture", ModelKind::mixture},
    {"linreg", ModelKind::linreg},
    {"bnn_regression", ModelKind::bnn_regression},
    {"bnn_classification", ModelKind::bnn_classification}};
const std::vector<std::pair<std::string, SamplerKind>> kSamplers = {
    {"opvi", SamplerKind::opvi}, {"svgd", SamplerKind::svgd}, {"sgld", SamplerKind::sgld},
    {"online_map", SamplerKind::online_map}};
const std::vector<std::pair<std::string, Activation>> kActivations = {
    {"tanh", Activation::tanh}, {"sigmoid", Activation::sigmoid}, {"relu", Activation::relu},
    {"identity", Activation::identity}};
const std::vector<std::pair<std::string, LikelihoodScaling>> kScalings = {
    {"unbiased", LikelihoodScaling::unbiased}, {"paper_literal", LikelihoodScaling::paper_literal}};
const std::vector<std::pair<std::string, StreamMode>> kStreams = {
    {"shuffled", StreamMode::shuffled}, {"sequential", StreamMode::sequential}};
const std::vector<std::pair<std::string, LikelihoodPopulation>> kPopulations = {
    {"full", LikelihoodPopulation::full}, {"seen_so_far", LikelihoodPopulation::seen_so_far}};

template <class E>
std::string name_of(E value, const std::vector<std::pair<std::string, E>>& options) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return "?";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(ModelKind k) { return name_of(k, kModels); }
std::string to_string(SamplerKind k) { return name_of(k, kSamplers); }

SamplerConfig ExperimentConfig::sampler_config() const {
  SamplerConfig cfg = SamplerConfig::defaults_for(sampler);
  if (diffusion_scale) cfg.diffusion_scale = *diffusion_scale;
  cfg.scaling = likelihood_scaling;
  cfg.projection_radius = projection_radius;
  return cfg;
}

Activation ExperimentConfig::activation() const {
  if (bnn_activation) return *bnn_activation;
  return model == ModelKind::bnn_classification ? Activation::sigmoid : Activation::tanh;
}

BnnTask ExperimentConfig::bnn_task() const {
  return model == ModelKind::bnn_classification ? BnnTask::classification : BnnTask::regression;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, RawEntry> entries;
  const std::set<std::string> keys(known_keys().begin(), known_keys().end());
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (!keys.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (entries.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    if (value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": '" + key + "' has no value");
    }
    entries.emplace(key, RawEntry{value, line_no});
  }
  const RawConfig raw(std::move(entries));

  ExperimentConfig c;
  raw.choice("model", c.model, kModels);
  raw.number("n_data", c.n_data);
  raw.number("data_seed", c.data_seed);
  raw.number("mixture_theta1", c.mixture_theta1);
  raw.number("mixture_theta2", c.mixture_theta2);
  raw.number("linreg_dim", c.linreg_dim);
  raw.number("linreg_noise_var", c.linreg_noise_var);
  raw.number("linreg_prior_var", c.linreg_prior_var);
  raw.text("dataset", c.dataset);
  raw.number("bnn_hidden", c.bnn_hidden);
  if (raw.find("bnn_activation") != nullptr) {
    Activation a = Activation::tanh;
    raw.choice("bnn_activation", a, kActivations);
    c.bnn_activation = a;
  }
  raw.number("bnn_weight_prior_var", c.bnn_weight_prior_var);
  raw.number("bnn_classes", c.bnn_classes);
  raw.number("bnn_features", c.bnn_features);
  raw.number("test_fraction", c.test_fraction);

  raw.choice("sampler", c.sampler, kSamplers);
  raw.optional_number("diffusion_scale", c.diffusion_scale);
  raw.choice("likelihood_scaling", c.likelihood_scaling, kScalings);
  if (const RawEntry* e = raw.find("projection_radius"); e != nullptr && e->value != "unbounded") {
    raw.optional_number("projection_radius", c.projection_radius);
  }
  raw.number("n_particles", c.n_particles);
  raw.number("rounds", c.rounds);
  raw.number("seed", c.seed);

  // Batch schedule.
  std::string batch = "power";
  raw.text("batch", batch);
  std::size_t batch_size_value = 20;
  double rho = 0.55;
  raw.number("batch_size", batch_size_value);
  raw.number("batch_rho", rho);
  if (batch == "static") {
    c.schedules.batch = StaticBatch{batch_size_value};
  } else if (batch == "power") {
    c.schedules.batch = PowerBatch{rho};
  } else if (batch == "saturating") {
    c.schedules.batch = SaturatingBatch{rho};
  } else if (batch == "full") {
    c.schedules.batch = FullBatch{};
  } else {
    RawConfig::fail("batch", *raw.find("batch"), "must be one of static|power|saturating|full");
  }
  raw.boolean("fitds", c.fitds);
  raw.choice("stream", c.stream, kStreams);
  raw.choice("likelihood_population", c.likelihood_population, kPopulations);

  std::string pw = "paper";
  raw.text("prior_weight", pw);
  double pw_value = 1.0;
  raw.number("prior_weight_value", pw_value);
  if (pw == "paper") {
    c.schedules.prior_weight = InverseSquarePriorWeight{};
  } else if (pw == "uniform") {
    c.schedules.prior_weight = UniformPriorWeight{std::max<std::size_t>(c.rounds, 1)};
  } else if (pw == "constant") {
    c.schedules.prior_weight = ConstantPriorWeight{pw_value};
  } else {
    RawConfig::fail("prior_weight", *raw.find("prior_weight"), "must be one of paper|uniform|constant");
  }

  std::string step = "constant";
  raw.text("step", step);
  double alpha0 = 0.1;
  double kappa = 0.55;
  raw.number("step_size", alpha0);
  raw.number("step_decay", kappa);
  if (step == "constant") {
    c.schedules.step = ConstantStep{alpha0};
  } else if (step == "decaying") {
    c.schedules.step = DecayingStep{alpha0, kappa};
  } else {
    RawConfig::fail("step", *raw.find("step"), "must be one of constant|decaying");
  }

  std::string bw = "median";
  raw.text("kernel_bandwidth", bw);
  double h = 1.0;
  raw.number("kernel_h", h);
  if (bw == "median") {
    c.kernel = KernelSpec::median();
  } else if (bw == "fixed") {
    c.kernel = KernelSpec::fixed(h);
  } else {
    RawConfig::fail("kernel_bandwidth", *raw.find("kernel_bandwidth"), "must be one of median|fixed");
  }

  std::string init = "normal";
  raw.text("init", init);
  if (init == "normal") {
    StandardNormalInit n;
    raw.number("init_scale", n.scale);
    c.init = n;
  } else if (init == "uniform") {
    UniformBoxInit u;
    raw.number("init_low", u.low);
    raw.number("init_high", u.high);
    c.init = u;
  } else if (init == "point") {
    const auto pt = raw.list("init_point");
    if (pt.empty()) RawConfig::fail("init", *raw.find("init"), "= point needs init_point");
    c.init = PointMassInit{Eigen::Map<const Vector>(pt.data(), static_cast<Eigen::Index>(pt.size()))};
  } else {
    RawConfig::fail("init", *raw.find("init"), "must be one of normal|uniform|point");
  }

  raw.boolean("diag_grad_error", c.diag_grad_error);
  raw.boolean("diag_objective", c.diag_objective);
  raw.boolean("diag_regret", c.diag_regret);
  raw.boolean("diag_energy", c.diag_energy);
  raw.boolean("diag_predictive", c.diag_predictive);
  raw.boolean("diag_fpc", c.diag_fpc);
  raw.number("metrics_every", c.metrics_every);
  raw.number("fpc_batch", c.fpc_batch);
  raw.number("fpc_draws", c.fpc_draws);
  raw.number("grid_resolution", c.grid_resolution);
  if (raw.find("grid_window") != nullptr) {
    const auto w = raw.list("grid_window");
    if (w.size() != 4) RawConfig::fail("grid_window", *raw.find("grid_window"), "expects theta1_lo,theta1_hi,theta2_lo,theta2_hi");
    c.grid_window = {w[0], w[1], w[2], w[3]};
  }
  raw.number("reference_size", c.reference_size);
  raw.boolean("svg", c.svg);
  raw.boolean("record_wallclock", c.record_wallclock);
  raw.text("output_dir", c.output_dir);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig c = parse_config(buf.str());
  if (!c.dataset.empty()) {
    std::filesystem::path ds(c.dataset);
    if (ds.is_relative() && !std::filesystem::exists(ds)) {
      const auto sibling = path.parent_path() / ds;
      if (std::filesystem::exists(sibling)) c.dataset = sibling.string();
    }
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (metrics_every < 1) throw ConfigError("metrics_every must be >= 1");
  if (dataset.empty() && n_data < 2) throw ConfigError("n_data must be >= 2");
  if (!dataset.empty()) {
    if (!is_bnn()) throw ConfigError("dataset files are only supported for BNN models");
    if (!std::filesystem::exists(dataset)) throw ConfigError("dataset file not found: " + dataset);
  }
  if (model == ModelKind::linreg && linreg_dim < 1) throw ConfigError("linreg_dim must be >= 1");
  if (!(linreg_noise_var > 0.0 && linreg_prior_var > 0.0)) throw ConfigError("linreg variances must be > 0");
  if (is_bnn()) {
    if (bnn_hidden < 1) throw ConfigError("bnn_hidden must be >= 1");
    if (!(bnn_weight_prior_var > 0.0)) throw ConfigError("bnn_weight_prior_var must be > 0");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (model == ModelKind::bnn_classification && bnn_classes < 2) throw ConfigError("bnn_classes must be >= 2");
  }
  sampler_config().validate();
  kernel.validate();
  if (const auto* n = std::get_if<StandardNormalInit>(&init); n && !(n->scale > 0.0)) {
    throw ConfigError("init_scale must be > 0");
  }
  if (const auto* u = std::get_if<UniformBoxInit>(&init); u && !(u->low < u->high)) {
    throw ConfigError("uniform init needs init_low < init_high");
  }
  if (diag_regret && model != ModelKind::linreg) throw ConfigError("diag_regret needs the linreg model");
  if (diag_energy && model != ModelKind::mixture) throw ConfigError("diag_energy needs the mixture model");
  if (svg && model != ModelKind::mixture) throw ConfigError("svg output needs the 2-D mixture model");
  if (diag_predictive && !is_bnn()) throw ConfigError("diag_predictive needs a BNN model");
  if ((diag_energy || svg) && (grid_resolution < 2 || reference_size < 1)) {
    throw ConfigError("grid_resolution must be >= 2 and reference_size >= 1");
  }
  if (!(grid_window.theta1_lo < grid_window.theta1_hi && grid_window.theta2_lo < grid_window.theta2_hi)) {
    throw ConfigError("grid_window bounds must satisfy lo < hi");
  }
  if (diag_fpc && (fpc_batch < 1 || fpc_draws < 1)) throw ConfigError("fpc_batch and fpc_draws must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  // A CSV row count is only known once the file is read; run_experiment re-checks.
  schedules.validate(dataset.empty() ? n_data : std::numeric_limits<std::size_t>::max());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  kv("model", to_string(model));
  kv("n_data", std::to_string(n_data));
  kv("data_seed", std::to_string(data_seed));
  kv("mixture_theta1", fmt(mixture_theta1));
  kv("mixture_theta2", fmt(mixture_theta2));
  kv("linreg_dim", std::to_string(linreg_dim));
  kv("linreg_noise_var", fmt(linreg_noise_var));
  kv("linreg_prior_var", fmt(linreg_prior_var));
  if (!dataset.empty()) kv("dataset", dataset);
  kv("bnn_hidden", std::to_string(bnn_hidden));
  kv("bnn_activation", name_of(activation(), kActivations));
  kv("bnn_weight_prior_var", fmt(bnn_weight_prior_var));
  kv("bnn_classes", std::to_string(bnn_classes));
  kv("bnn_features", std::to_string(bnn_features));
  kv("test_fraction", fmt(test_fraction));

  kv("sampler", to_string(sampler));
  kv("diffusion_scale", fmt(sampler_config().diffusion_scale));
  kv("likelihood_scaling", name_of(likelihood_scaling, kScalings));
  kv("projection_radius", projection_radius ? fmt(*projection_radius) : "unbounded");
  kv("n_particles", std::to_string(n_particles));
  kv("rounds", std::to_string(rounds));
  kv("seed", std::to_string(seed));

  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StaticBatch>) {
          kv("batch", "static");
          kv("batch_size", std::to_string(s.size));
        } else if constexpr (std::is_same_v<T, PowerBatch>) {
          kv("batch", "power");
          kv("batch_rho", fmt(s.rho));
        } else if constexpr (std::is_same_v<T, SaturatingBatch>) {
          kv("batch", "saturating");
          kv("batch_rho", fmt(s.rho));
        } else {
          kv("batch", "full");
        }
      },
      schedules.batch);
  kv("fitds", b(fitds));
  kv("stream", name_of(stream, kStreams));
  kv("likelihood_population", name_of(likelihood_population, kPopulations));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InverseSquarePriorWeight>) {
          kv("prior_weight", "paper");
        } else if constexpr (std::is_same_v<T, UniformPriorWeight>) {
          kv("prior_weight", "uniform");
        } else {
          kv("prior_weight", "constant");
          kv("prior_weight_value", fmt(s.value));
        }
      },
      schedules.prior_weight);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantStep>) {
          kv("step", "constant");
          kv("step_size", fmt(s.alpha0));
        } else {
          kv("step", "decaying");
          kv("step_size", fmt(s.alpha0));
          kv("step_decay", fmt(s.kappa));
        }
      },
      schedules.step);
  if (kernel.mode == KernelSpec::Bandwidth::fixed) {
    kv("kernel_bandwidth", "fixed");
    kv("kernel_h", fmt(kernel.h));
  } else {
    kv("kernel_bandwidth", "median");
  }
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StandardNormalInit>) {
          kv("init", "normal");
          kv("init_scale", fmt(s.scale));
        } else if constexpr (std::is_same_v<T, UniformBoxInit>) {
          kv("init", "uniform");
          kv("init_low", fmt(s.low));
          kv("init_high", fmt(s.high));
        } else {
          kv("init", "point");
          std::string pts;
          for (Eigen::Index i = 0; i < s.point.size(); ++i) pts += (i ? "," : "") + fmt(s.point(i));
          kv("init_point", pts);
        }
      },
      init);

  kv("diag_grad_error", b(diag_grad_error));
  kv("diag_objective", b(diag_objective));
  kv("diag_regret", b(diag_regret));
  kv("diag_energy", b(diag_energy));
  kv("diag_predictive", b(diag_predictive));
  kv("diag_fpc", b(diag_fpc));
  kv("metrics_every", std::to_string(metrics_every));
  kv("fpc_batch", std::to_string(fpc_batch));
  kv("fpc_draws", std::to_string(fpc_draws));
  kv("grid_resolution", std::to_string(grid_resolution));
  kv("grid_window", fmt(grid_window.theta1_lo) + "," + fmt(grid_window.theta1_hi) + "," +
                        fmt(grid_window.theta2_lo) + "," + fmt(grid_window.theta2_hi));
  kv("reference_size", std::to_string(reference_size));
  kv("svg", b(svg));
  kv("record_wallclock", b(record_wallclock));
  kv("output_dir", output_dir);
  return o.str();
}

}  // namespace opvi
