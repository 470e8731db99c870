#pragma once

#include <optional>
#include <span>
#include <vector>

#include "opvi/core.hpp"
#include "opvi/models.hpp"

namespace opvi {

// Gradient errors are measured in mean form: the batch mean of per-datum cost
// gradients grad c^k = -grad log p(d_k | w) against the population mean. The
// optimization-scale error (unbiased N_T/B_t scaling) is N_T times this value.

/// Per-datum cost gradients at w over the first n data, their mean, and the
/// sample variance S^2 = 1/(n-1) sum |g_k - mean|^2.
struct GradientPopulation {
  ParticleMatrix per_datum;
  Vector mean;
  double variance = 0.0;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(per_datum.rows()); }
};

GradientPopulation gradient_population(const TargetModel& model, const Vector& w,
                                       std::size_t n = 0);

/// |(1/B) sum_{k in batch} grad c^k(w) - (1/N) sum_k grad c^k(w)|.
double gradient_error(const TargetModel& model, const Vector& w, std::span<const std::size_t> batch);
double gradient_error(const GradientPopulation& pop, std::span<const std::size_t> batch);
/// Same, with the population mean of grad c^k supplied by the caller.
double gradient_error(const TargetModel& model, const Vector& w, std::span<const std::size_t> batch,
                      const Vector& population_mean_cost_grad);

/// (N - B) / (N B) * S^2.
double fpc_predicted_variance(std::size_t n, std::size_t b, double variance);

struct FpcValidation {
  double empirical = 0.0;
  double predicted = 0.0;
  double rel_err = 0.0;
};

/// Monte-Carlo E|e|^2 over uniform without-replacement batches of size B from
/// the first N data, against the finite-population prediction.
FpcValidation validate_fpc_variance(const TargetModel& model, const Vector& w, std::size_t n,
                                    std::size_t b, std::size_t draws, const RngStream& rng);

/// Running estimate of the cumulative gradient error sum_t eps_t.
class ErrorBudget {
 public:
  void record(double eps);

  [[nodiscard]] const std::vector<double>& per_round() const { return per_round_; }
  [[nodiscard]] const std::vector<double>& cumulative() const { return cumulative_; }
  [[nodiscard]] double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  std::optional<double> lambda_hat;

 private:
  std::vector<double> per_round_;
  std::vector<double> cumulative_;
};

/// Dynamic regret against per-round MAP optima plus their path length.
class RegretLedger {
 public:
  void record(double cost, double oracle_cost, const Vector& oracle_point);

  [[nodiscard]] const std::vector<double>& costs() const { return costs_; }
  [[nodiscard]] const std::vector<double>& oracle_costs() const { return oracle_costs_; }
  [[nodiscard]] const std::vector<double>& increments() const { return increments_; }
  [[nodiscard]] const std::vector<double>& cumulative() const { return cumulative_; }
  [[nodiscard]] const std::vector<double>& path_variation() const { return path_; }
  [[nodiscard]] double regret() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  [[nodiscard]] double variation() const { return path_.empty() ? 0.0 : path_.back(); }
  [[nodiscard]] std::size_t rounds() const { return costs_.size(); }

 private:
  std::vector<double> costs_;
  std::vector<double> oracle_costs_;
  std::vector<double> increments_;
  std::vector<double> cumulative_;
  std::vector<double> path_;
  std::optional<Vector> last_oracle_;
};

/// Appends round t: cost of w_t against the exact MAP optimum for weight eta.
RegretLedger& dynamic_regret_update(RegretLedger& ledger, const LinRegModel& model, const Vector& w,
                                    std::size_t t, double eta);

/// V-statistic 2 E|A - B| - E|A - A'| - E|B - B'|.
double energy_distance(const ParticleMatrix& a, const ParticleMatrix& b);

struct PredictiveMetrics {
  double rmse = 0.0;
  double test_ll = 0.0;
  std::optional<double> accuracy;
};

/// Bayesian model averaging over particles. Regression RMSE uses the mean
/// prediction; classification RMSE compares averaged probabilities to one-hot
/// targets. test_ll is the mean log of the particle-averaged predictive density.
PredictiveMetrics predictive_metrics(const ParticleEnsemble& e, const BnnModel& model, const Dataset& test);

/// Least-squares slope of log(series_T) against log(T) over the last half of
/// the horizon (T = 1-based index).
double sublinearity_exponent(std::span<const double> series);

}  // namespace opvi
