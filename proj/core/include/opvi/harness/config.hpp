#pragma once

// Declarative experiment description. The file format is flat "key = value"
// text with '#' comments; unknown keys, duplicate keys and malformed values are
// hard errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "opvi/core.hpp"
#include "opvi/kernels.hpp"
#include "opvi/models.hpp"
#include "opvi/samplers.hpp"
#include "opvi/schedules.hpp"
#include "opvi/stream.hpp"

namespace opvi {

enum class ModelKind { mixture, linreg, bnn_regression, bnn_classification };

struct ExperimentConfig {
  // Model and data.
  ModelKind model = ModelKind::mixture;
  std::size_t n_data = 10000;  ///< generated data size, or row cap for a CSV (0 = all rows)
  std::uint64_t data_seed = 1;
  double mixture_theta1 = 0.0;
  double mixture_theta2 = 1.0;
  std::size_t linreg_dim = 5;
  double linreg_noise_var = 1.0;
  double linreg_prior_var = 1.0;
  std::string dataset;  ///< CSV path; empty selects the synthetic generator
  std::size_t bnn_hidden = 50;
  std::optional<Activation> bnn_activation;  ///< default tanh (regression), sigmoid (classification)
  double bnn_weight_prior_var = 1.0;
  std::size_t bnn_classes = 10;
  std::size_t bnn_features = 16;  ///< synthetic classification only
  double test_fraction = 0.1;

  // Sampler.
  SamplerKind sampler = SamplerKind::opvi;
  std::optional<double> diffusion_scale;  ///< default 0.1 for OPVI, 1.0 otherwise
  LikelihoodScaling likelihood_scaling = LikelihoodScaling::unbiased;
  std::optional<double> projection_radius;
  std::size_t n_particles = 100;
  std::size_t rounds = 500;
  std::uint64_t seed = 0;

  SchedulePack schedules;
  bool fitds = true;
  StreamMode stream = StreamMode::shuffled;
  LikelihoodPopulation likelihood_population = LikelihoodPopulation::full;
  KernelSpec kernel;
  InitSpec init = StandardNormalInit{};

  // Diagnostics.
  bool diag_grad_error = false;
  bool diag_objective = false;
  bool diag_regret = false;
  bool diag_energy = false;
  bool diag_predictive = false;
  bool diag_fpc = false;
  std::size_t metrics_every = 1;  ///< cadence of expensive metrics; the last round always reports
  std::size_t fpc_batch = 10;
  std::size_t fpc_draws = 20000;
  std::size_t grid_resolution = 400;
  GridWindow grid_window;
  std::size_t reference_size = 1000;

  // Outputs.
  bool svg = false;
  bool record_wallclock = false;  ///< off keeps trace files byte-reproducible
  std::string output_dir = "runs";

  [[nodiscard]] SamplerConfig sampler_config() const;
  [[nodiscard]] Activation activation() const;
  [[nodiscard]] BnnTask bnn_task() const;
  [[nodiscard]] bool is_bnn() const {
    return model == ModelKind::bnn_regression || model == ModelKind::bnn_classification;
  }

  /// Fail-fast checks: numeric bounds, cross-field consistency, file existence.
  void validate() const;

  /// Resolved configuration in the same key = value format (round-trips).
  [[nodiscard]] std::string to_text() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(ModelKind k);
std::string to_string(SamplerKind k);

}  // namespace opvi
