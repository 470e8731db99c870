#include "opvi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "opvi/parallel.hpp"
#include "opvi/stream.hpp"

namespace opvi {

GradientPopulation gradient_population(const TargetModel& model, const Vector& w, std::size_t n) {
  if (n == 0) n = model.n_data();
  if (n > model.n_data()) throw ConfigError("gradient population larger than the dataset");
  GradientPopulation pop;
  pop.per_datum.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.dim()));
  for (std::size_t k = 0; k < n; ++k) pop.per_datum.row(static_cast<Eigen::Index>(k)) = -model.grad_log_lik(w, k).transpose();
  pop.mean = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  for (Eigen::Index k = 0; k < pop.per_datum.rows(); ++k) pop.mean += pop.per_datum.row(k).transpose();
  pop.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (Eigen::Index k = 0; k < pop.per_datum.rows(); ++k) {
      ss += (pop.per_datum.row(k).transpose() - pop.mean).squaredNorm();
    }
    pop.variance = ss / static_cast<double>(n - 1);
  }
  return pop;
}

namespace {
// Batch sums always run in ascending index order so a full batch reproduces
// the population mean exactly.
std::vector<std::size_t> sorted_copy(std::span<const std::size_t> batch) {
  std::vector<std::size_t> s(batch.begin(), batch.end());
  std::sort(s.begin(), s.end());
  return s;
}
}  // namespace

double gradient_error(const GradientPopulation& pop, std::span<const std::size_t> batch) {
  if (batch.empty()) throw ConfigError("gradient error needs a nonempty batch");
  Vector acc = Vector::Zero(pop.mean.size());
  for (std::size_t k : sorted_copy(batch)) {
    if (k >= pop.size()) throw ConfigError("batch index outside the gradient population");
    acc += pop.per_datum.row(static_cast<Eigen::Index>(k)).transpose();
  }
  return (acc / static_cast<double>(batch.size()) - pop.mean).norm();
}

double gradient_error(const TargetModel& model, const Vector& w, std::span<const std::size_t> batch,
                      const Vector& population_mean_cost_grad) {
  if (batch.empty()) throw ConfigError("gradient error needs a nonempty batch");
  const auto sorted = sorted_copy(batch);
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  model.accumulate_grad_log_lik(w, sorted, acc);
  return (-acc / static_cast<double>(batch.size()) - population_mean_cost_grad).norm();
}

double gradient_error(const TargetModel& model, const Vector& w, std::span<const std::size_t> batch) {
  Vector full = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  for (std::size_t k = 0; k < model.n_data(); ++k) full -= model.grad_log_lik(w, k);
  full /= static_cast<double>(model.n_data());
  const auto sorted = sorted_copy(batch);
  if (sorted.empty()) throw ConfigError("gradient error needs a nonempty batch");
  Vector acc = Vector::Zero(full.size());
  for (std::size_t k : sorted) acc -= model.grad_log_lik(w, k);
  return (acc / static_cast<double>(sorted.size()) - full).norm();
}

double fpc_predicted_variance(std::size_t n, std::size_t b, double variance) {
  const double nn = static_cast<double>(n);
  const double bb = static_cast<double>(b);
  return (nn - bb) / (nn * bb) * variance;
}

FpcValidation validate_fpc_variance(const TargetModel& model, const Vector& w, std::size_t n,
                                    std::size_t b, std::size_t draws, const RngStream& rng) {
  if (b < 1 || b > n) throw ConfigError("FPC validation needs 1 <= B <= N");
  if (draws < 1) throw ConfigError("FPC validation needs at least one draw");
  const GradientPopulation pop = gradient_population(model, w, n);
  FpcValidation out;
  out.predicted = fpc_predicted_variance(n, b, pop.variance);

  double sum_sq = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    auto eng = rng.engine(RngRole::fpc, d, 0);
    const auto batch = sample_without_replacement(n, b, eng);
    const double e = gradient_error(pop, batch);
    sum_sq += e * e;
  }
  out.empirical = sum_sq / static_cast<double>(draws);
  if (out.predicted > 0.0) {
    out.rel_err = std::abs(out.empirical - out.predicted) / out.predicted;
  } else {
    out.rel_err = out.empirical == 0.0 ? 0.0 : std::abs(out.empirical);
  }
  return out;
}

void ErrorBudget::record(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw NumericError("gradient error estimate must be finite and >= 0");
  per_round_.push_back(eps);
  cumulative_.push_back(total() + eps);
}

void RegretLedger::record(double cost, double oracle_cost, const Vector& oracle_point) {
  const double inc = cost - oracle_cost;
  costs_.push_back(cost);
  oracle_costs_.push_back(oracle_cost);
  increments_.push_back(inc);
  cumulative_.push_back(regret() + inc);
  const double step = last_oracle_ ? (oracle_point - *last_oracle_).norm() : 0.0;
  path_.push_back(variation() + step);
  last_oracle_ = oracle_point;
}

RegretLedger& dynamic_regret_update(RegretLedger& ledger, const LinRegModel& model, const Vector& w,
                                    std::size_t /*t*/, double eta) {
  const Vector w_star = linreg_map_oracle(model, eta);
  ledger.record(model.cost(w, eta), model.cost(w_star, eta), w_star);
  return ledger;
}

double energy_distance(const ParticleMatrix& a, const ParticleMatrix& b) {
  if (a.rows() < 1 || b.rows() < 1) throw ConfigError("energy distance needs nonempty samples");
  if (a.cols() != b.cols()) throw ConfigError("energy distance samples differ in dimension");
  // Row-block partial sums combined in a fixed order.
  auto mean_dist = [](const ParticleMatrix& p, const ParticleMatrix& q) {
    std::vector<double> rows(static_cast<std::size_t>(p.rows()));
    parallel_for(rows.size(), [&](std::size_t i) {
      double s = 0.0;
      const auto pi = p.row(static_cast<Eigen::Index>(i));
      for (Eigen::Index j = 0; j < q.rows(); ++j) s += (pi - q.row(j)).norm();
      rows[i] = s;
    });
    double total = 0.0;
    for (double r : rows) total += r;
    return total / (static_cast<double>(p.rows()) * static_cast<double>(q.rows()));
  };
  const double d = 2.0 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b);
  return std::max(0.0, d);
}

PredictiveMetrics predictive_metrics(const ParticleEnsemble& e, const BnnModel& model, const Dataset& test) {
  if (test.size() < 1) throw ConfigError("predictive metrics need a nonempty test set");
  if (test.n_features() != model.arch().inputs) throw ConfigError("test set width does not match the network");
  const std::size_t n = e.size();
  const std::size_t m = test.size();
  const bool regression = model.arch().task == BnnTask::regression;
  std::vector<double> sq_err(m);
  std::vector<double> ll(m);
  std::vector<int> correct(m);
  const double log_n = std::log(static_cast<double>(n));
  std::vector<Vector> particles(n);
  for (std::size_t i = 0; i < n; ++i) particles[i] = e.particle(i);

  parallel_for(m, [&](std::size_t r) {
    const auto row = static_cast<Eigen::Index>(r);
    const auto input = test.features.row(row);
    const double target = test.targets(row);
    Vector logs(static_cast<Eigen::Index>(n));
    if (regression) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mean += model.predict_mean(particles[i], input);
        logs(static_cast<Eigen::Index>(i)) = model.log_predictive(particles[i], input, target);
      }
      mean /= static_cast<double>(n);
      sq_err[r] = (mean - target) * (mean - target);
    } else {
      Vector probs = Vector::Zero(static_cast<Eigen::Index>(model.arch().outputs));
      for (std::size_t i = 0; i < n; ++i) {
        probs += model.forward(particles[i], input);
        logs(static_cast<Eigen::Index>(i)) = model.log_predictive(particles[i], input, target);
      }
      probs /= static_cast<double>(n);
      Vector onehot = Vector::Zero(probs.size());
      onehot(static_cast<Eigen::Index>(target)) = 1.0;
      sq_err[r] = (probs - onehot).squaredNorm();
      Eigen::Index best = 0;
      probs.maxCoeff(&best);
      correct[r] = best == static_cast<Eigen::Index>(target) ? 1 : 0;
    }
    const double peak = logs.maxCoeff();
    ll[r] = peak + std::log((logs.array() - peak).exp().sum()) - log_n;
  });

  PredictiveMetrics out;
  double se = 0.0;
  double lls = 0.0;
  long hits = 0;
  for (std::size_t r = 0; r < m; ++r) {
    se += sq_err[r];
    lls += ll[r];
    hits += correct[r];
  }
  out.rmse = std::sqrt(se / static_cast<double>(m));
  out.test_ll = lls / static_cast<double>(m);
  if (!regression) out.accuracy = static_cast<double>(hits) / static_cast<double>(m);
  return out;
}

double sublinearity_exponent(std::span<const double> series) {
  if (series.size() < 2) throw ConfigError("sublinearity exponent needs at least two points");
  for (double v : series) {
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("sublinearity exponent needs positive finite entries");
  }
  const std::size_t start = series.size() / 2;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(series.size() - start);
  for (std::size_t i = start; i < series.size(); ++i) {
    const double x = std::log(static_cast<double>(i + 1));
    const double y = std::log(series[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  if (!(denom > 0.0)) throw NumericError("sublinearity exponent fit is degenerate");
  return (count * sxy - sx * sy) / denom;
}

}  // namespace opvi
