#pragma once

// Concrete target models: the two-parameter Gaussian mixture, Bayesian linear
// regression (with an exact MAP oracle), and one-hidden-layer Bayesian neural
// networks for regression and classification.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "opvi/core.hpp"

namespace opvi {

// ---------------------------------------------------------------------------
// Gaussian mixture over (theta1, theta2)
// ---------------------------------------------------------------------------

struct MixtureParams {
  double prior_var1 = 10.0;
  double prior_var2 = 1.0;
  double sigma_x = 2.0;
};

/// x ~ 0.5 N(theta1, sigma_x^2) + 0.5 N(theta1 + theta2, sigma_x^2).
std::vector<double> mixture_generate(std::size_t n, double theta1, double theta2,
                                     std::uint64_t seed, double sigma_x = 2.0);

/// Responsibility-weighted gradient of log p(x | theta), computed in log space.
std::array<double, 2> mixture_grad_log_lik(double theta1, double theta2, double x,
                                           double sigma_x = 2.0);
double mixture_log_lik(double theta1, double theta2, double x, double sigma_x = 2.0);

class MixtureModel final : public TargetModel {
 public:
  explicit MixtureModel(std::vector<double> data, MixtureParams params = {});

  [[nodiscard]] std::size_t dim() const override { return 2; }
  [[nodiscard]] std::size_t n_data() const override { return data_.size(); }
  [[nodiscard]] double log_prior(const Vector& w) const override;
  [[nodiscard]] Vector grad_log_prior(const Vector& w) const override;
  [[nodiscard]] double log_lik(const Vector& w, std::size_t k) const override;
  [[nodiscard]] Vector grad_log_lik(const Vector& w, std::size_t k) const override;
  void accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                               Vector& out) const override;
  [[nodiscard]] Vector full_grad_log_lik(const Vector& w) const override;
  [[nodiscard]] double full_log_lik(const Vector& w) const override;

  [[nodiscard]] const std::vector<double>& data() const { return data_; }
  [[nodiscard]] const MixtureParams& params() const { return params_; }

 private:
  std::vector<double> data_;
  MixtureParams params_;
};

/// Rectangular window over (theta1, theta2).
struct GridWindow {
  double theta1_lo = -3.0;
  double theta1_hi = 3.0;
  double theta2_lo = -3.0;
  double theta2_hi = 3.0;
};

struct MixtureGrid {
  GridWindow window;
  std::size_t resolution = 0;
  /// log_density(i2, i1): unnormalized log posterior at cell centre
  /// (theta1 axis along columns, theta2 along rows).
  Matrix log_density;
  /// Normalized cell probabilities, same layout, summing to 1.
  Matrix cell_mass;
  /// Multinomial resample of cells with uniform within-cell jitter.
  ParticleMatrix reference;
  /// Set when the window excludes at least 99.9% of the prior mass.
  bool window_warning = false;

  [[nodiscard]] double theta1_at(std::size_t i) const;
  [[nodiscard]] double theta2_at(std::size_t i) const;
  [[nodiscard]] Vector mean() const;
};

MixtureGrid mixture_posterior_grid(const MixtureModel& model, std::size_t resolution,
                                   const GridWindow& window, std::size_t reference_size,
                                   const RngStream& rng);

/// Prior probability mass inside the window.
double prior_mass_in_window(const MixtureParams& params, const GridWindow& window);

// ---------------------------------------------------------------------------
// Bayesian linear regression
// ---------------------------------------------------------------------------

class LinRegModel final : public TargetModel {
 public:
  LinRegModel(Matrix x, Vector y, double noise_var, double prior_var);

  [[nodiscard]] std::size_t dim() const override { return static_cast<std::size_t>(x_.cols()); }
  [[nodiscard]] std::size_t n_data() const override { return static_cast<std::size_t>(x_.rows()); }
  [[nodiscard]] double log_prior(const Vector& w) const override;
  [[nodiscard]] Vector grad_log_prior(const Vector& w) const override;
  [[nodiscard]] double log_lik(const Vector& w, std::size_t k) const override;
  [[nodiscard]] Vector grad_log_lik(const Vector& w, std::size_t k) const override;
  void accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                               Vector& out) const override;
  /// Closed form through the sufficient statistics X^T X, X^T y, y^T y.
  [[nodiscard]] Vector full_grad_log_lik(const Vector& w) const override;
  [[nodiscard]] double full_log_lik(const Vector& w) const override;

  [[nodiscard]] const Matrix& design() const { return x_; }
  [[nodiscard]] const Vector& targets() const { return y_; }
  [[nodiscard]] double noise_var() const { return noise_var_; }
  [[nodiscard]] double prior_var() const { return prior_var_; }
  [[nodiscard]] const Matrix& gram() const { return xtx_; }
  [[nodiscard]] const Vector& moment() const { return xty_; }

  /// c_t(w) + eta c_0(w) = -full_log_lik(w) - eta log_prior(w).
  [[nodiscard]] double cost(const Vector& w, double eta) const;

 private:
  Matrix x_;
  Vector y_;
  double noise_var_;
  double prior_var_;
  Matrix xtx_;
  Vector xty_;
  double yty_;
};

/// Features with per-column scales spread over [0.25, 4] (heterogeneous
/// per-datum gradients) and y = X w_true + noise.
LinRegModel linreg_generate(std::size_t n, std::size_t dim, std::uint64_t seed,
                            double noise_var = 1.0, double prior_var = 1.0);

/// Exact minimizer of sum_k c^k(w) + eta c_0(w).
Vector linreg_map_oracle(const LinRegModel& model, double eta);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

enum class BnnTask { regression, classification };

struct Dataset {
  ParticleMatrix features;  ///< N x n_features, row per datum
  Vector targets;           ///< regression value or integer class label

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  [[nodiscard]] std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
};

/// Comma separated; a header is detected when the first row has a non-numeric
/// field. The last column is the target. Non-numeric data fields are errors.
Dataset load_csv_dataset(const std::filesystem::path& path, BnnTask task);
Dataset parse_csv_dataset(const std::string& text, BnnTask task);

/// Eight uniform features on [0, 1] and a smooth nonlinear target plus noise.
Dataset synthetic_regression(std::size_t n, std::uint64_t seed, double noise_sd = 0.1);

/// Gaussian class clusters in n_features dimensions.
Dataset synthetic_classification(std::size_t n, std::size_t n_features, std::size_t n_classes,
                                 std::uint64_t seed);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Random split; test gets round(test_fraction * N) rows (at least one).
DatasetSplit split_dataset(const Dataset& ds, double test_fraction, const RngStream& rng);

/// Affine map applied to features (and regression targets) from train stats.
struct Standardizer {
  Eigen::RowVectorXd feature_mean;
  Eigen::RowVectorXd feature_scale;
  double target_mean = 0.0;
  double target_scale = 1.0;

  static Standardizer fit(const Dataset& train, BnnTask task);
  [[nodiscard]] Dataset apply(const Dataset& ds, BnnTask task) const;
};

// ---------------------------------------------------------------------------
// Bayesian neural network
// ---------------------------------------------------------------------------

enum class Activation { tanh, sigmoid, relu, identity };

struct BnnArchitecture {
  std::size_t inputs = 8;
  std::size_t hidden = 50;
  std::size_t outputs = 1;
  Activation activation = Activation::tanh;
  BnnTask task = BnnTask::regression;

  /// W1 (hidden x inputs, row-major), b1, W2 (outputs x hidden), b2, then
  /// log noise precision for regression.
  [[nodiscard]] std::size_t param_count() const;
  void validate() const;
};

struct BnnPrior {
  double weight_var = 1.0;
  double gamma_shape = 1.0;  ///< Gamma(shape, rate) on the noise precision
  double gamma_rate = 0.1;
};

class BnnModel final : public TargetModel {
 public:
  /// train must already be standardized; target_mean/scale map network
  /// outputs back to original units for predictive metrics.
  BnnModel(BnnArchitecture arch, Dataset train, BnnPrior prior = {}, double target_mean = 0.0,
           double target_scale = 1.0);

  [[nodiscard]] std::size_t dim() const override { return arch_.param_count(); }
  [[nodiscard]] std::size_t n_data() const override { return train_.size(); }
  [[nodiscard]] double log_prior(const Vector& w) const override;
  [[nodiscard]] Vector grad_log_prior(const Vector& w) const override;
  [[nodiscard]] double log_lik(const Vector& w, std::size_t k) const override;
  [[nodiscard]] Vector grad_log_lik(const Vector& w, std::size_t k) const override;
  void accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                               Vector& out) const override;

  /// Network output: raw for regression, softmax probabilities for classification.
  [[nodiscard]] Vector forward(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input) const;

  /// log p(target | input, w) in original target units.
  [[nodiscard]] double log_predictive(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input,
                                      double target) const;
  /// Regression mean prediction in original units.
  [[nodiscard]] double predict_mean(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input) const;

  [[nodiscard]] const BnnArchitecture& arch() const { return arch_; }
  [[nodiscard]] const Dataset& train() const { return train_; }
  [[nodiscard]] double target_mean() const { return target_mean_; }
  [[nodiscard]] double target_scale() const { return target_scale_; }

 private:
  double datum_log_lik(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input,
                       double target) const;
  void datum_grad(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input, double target,
                  Vector& out) const;

  BnnArchitecture arch_;
  Dataset train_;
  BnnPrior prior_;
  double target_mean_;
  double target_scale_;
};

/// bnn_forward as a free function.
Vector bnn_forward(const BnnModel& model, const Vector& w,
                   const Eigen::Ref<const Eigen::RowVectorXd>& input);

}  // namespace opvi
