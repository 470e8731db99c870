#pragma once

// Shared data model: ensembles, the target-model interface, errors and
// per-round bookkeeping.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "opvi/rng.hpp"

namespace opvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major so each particle (row) is contiguous.
using ParticleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Invalid configuration or arguments detected before any numerics run.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced or received a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[nodiscard]] bool all_finite(const Eigen::Ref<const Vector>& v);

/// n particles x dim coordinates, plus the round they belong to.
class ParticleEnsemble {
 public:
  explicit ParticleEnsemble(ParticleMatrix positions, std::size_t round = 0);

  [[nodiscard]] const ParticleMatrix& positions() const { return positions_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(positions_.rows()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(positions_.cols()); }
  [[nodiscard]] std::size_t round() const { return round_; }
  [[nodiscard]] Vector particle(std::size_t i) const { return positions_.row(static_cast<Eigen::Index>(i)).transpose(); }

  /// Next-round ensemble. Shape must match; entries must be finite.
  [[nodiscard]] ParticleEnsemble advanced(ParticleMatrix next) const;

 private:
  ParticleMatrix positions_;
  std::size_t round_;
};

struct StandardNormalInit {
  double scale = 1.0;
};
struct UniformBoxInit {
  double low = 0.0;
  double high = 1.0;
};
struct PointMassInit {
  Vector point;
};
using InitSpec = std::variant<StandardNormalInit, UniformBoxInit, PointMassInit>;

/// i.i.d. draws from init; particle i uses the (init, round 0, i) stream.
ParticleEnsemble init_ensemble(std::size_t n, std::size_t dim, const InitSpec& init,
                               const RngStream& rng);

Vector ensemble_mean(const ParticleEnsemble& e);

/// Pluggable posterior p(w) = p0(w) * prod_k p(d_k | w). Implementations must be
/// immutable during evaluation and safe to call from several threads.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  [[nodiscard]] virtual std::size_t dim() const = 0;
  [[nodiscard]] virtual std::size_t n_data() const = 0;

  [[nodiscard]] virtual double log_prior(const Vector& w) const = 0;
  [[nodiscard]] virtual Vector grad_log_prior(const Vector& w) const = 0;
  [[nodiscard]] virtual double log_lik(const Vector& w, std::size_t k) const = 0;
  [[nodiscard]] virtual Vector grad_log_lik(const Vector& w, std::size_t k) const = 0;

  /// out += sum over indices of grad log p(d_k | w). Models override for speed.
  virtual void accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                                       Vector& out) const;

  /// Sum over the whole dataset, in index order.
  [[nodiscard]] virtual Vector full_grad_log_lik(const Vector& w) const;
  [[nodiscard]] virtual double full_log_lik(const Vector& w) const;
};

/// Indices for one round plus the population they were drawn from (N_T, or
/// the number of data seen so far when streaming restricts the likelihood).
struct Minibatch {
  std::vector<std::size_t> indices;
  std::size_t population = 0;
};

/// One row of the per-round trace. Optional metrics are omitted when not
/// computed in a round, never zero-filled.
struct RoundTrace {
  std::size_t t = 0;
  std::size_t batch_size = 0;
  double eta = 0.0;
  double alpha = 0.0;
  std::optional<double> grad_error;
  std::optional<double> objective;
  std::optional<double> regret_increment;
  std::optional<double> regret_cum;
  std::optional<double> energy_dist;
  std::optional<double> rmse;
  std::optional<double> test_ll;
  std::optional<double> wallclock_ms;
};

}  // namespace opvi
