#include <cmath>
#include <numbers>
#include <random>

#include "opvi/models.hpp"

namespace opvi {

LinRegModel::LinRegModel(Matrix x, Vector y, double noise_var, double prior_var)
    : x_(std::move(x)), y_(std::move(y)), noise_var_(noise_var), prior_var_(prior_var) {
  if (x_.rows() < 1 || x_.cols() < 1) throw ConfigError("linear regression needs data");
  if (x_.rows() != y_.size()) throw ConfigError("design matrix and targets differ in length");
  if (!(noise_var_ > 0.0 && prior_var_ > 0.0)) throw ConfigError("variances must be > 0");
  xtx_ = x_.transpose() * x_;
  xty_ = x_.transpose() * y_;
  yty_ = y_.squaredNorm();
}

double LinRegModel::log_prior(const Vector& w) const {
  const double d = static_cast<double>(w.size());
  return -0.5 * w.squaredNorm() / prior_var_ - 0.5 * d * std::log(2.0 * std::numbers::pi * prior_var_);
}

Vector LinRegModel::grad_log_prior(const Vector& w) const { return -w / prior_var_; }

double LinRegModel::log_lik(const Vector& w, std::size_t k) const {
  const double r = y_(static_cast<Eigen::Index>(k)) - x_.row(static_cast<Eigen::Index>(k)).dot(w);
  return -0.5 * r * r / noise_var_ - 0.5 * std::log(2.0 * std::numbers::pi * noise_var_);
}

Vector LinRegModel::grad_log_lik(const Vector& w, std::size_t k) const {
  const auto row = x_.row(static_cast<Eigen::Index>(k));
  const double r = y_(static_cast<Eigen::Index>(k)) - row.dot(w);
  return (r / noise_var_) * row.transpose();
}

void LinRegModel::accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                                          Vector& out) const {
  for (std::size_t k : indices) {
    const auto row = x_.row(static_cast<Eigen::Index>(k));
    const double r = y_(static_cast<Eigen::Index>(k)) - row.dot(w);
    out += (r / noise_var_) * row.transpose();
  }
}

Vector LinRegModel::full_grad_log_lik(const Vector& w) const {
  return (xty_ - xtx_ * w) / noise_var_;
}

double LinRegModel::full_log_lik(const Vector& w) const {
  const double rss = w.dot(xtx_ * w) - 2.0 * w.dot(xty_) + yty_;
  const double n = static_cast<double>(x_.rows());
  return -0.5 * rss / noise_var_ - 0.5 * n * std::log(2.0 * std::numbers::pi * noise_var_);
}

double LinRegModel::cost(const Vector& w, double eta) const {
  return -full_log_lik(w) - eta * log_prior(w);
}

LinRegModel linreg_generate(std::size_t n, std::size_t dim, std::uint64_t seed, double noise_var,
                            double prior_var) {
  if (n < 1 || dim < 1) throw ConfigError("linreg_generate needs n, dim >= 1");
  const RngStream rng(seed);
  auto eng = rng.engine(RngRole::data, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector scales(static_cast<Eigen::Index>(dim));
  for (std::size_t d = 0; d < dim; ++d) {
    const double frac = dim == 1 ? 0.5 : static_cast<double>(d) / static_cast<double>(dim - 1);
    scales(static_cast<Eigen::Index>(d)) = 0.25 * std::pow(16.0, frac);
  }
  Vector w_true(static_cast<Eigen::Index>(dim));
  for (auto& v : w_true) v = normal(eng);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  Vector y(static_cast<Eigen::Index>(n));
  const double noise_sd = std::sqrt(noise_var);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) x(i, d) = scales(d) * normal(eng);
    y(i) = x.row(i).dot(w_true) + noise_sd * normal(eng);
  }
  return LinRegModel(std::move(x), std::move(y), noise_var, prior_var);
}

Vector linreg_map_oracle(const LinRegModel& model, double eta) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Matrix a = model.gram() / model.noise_var() + (eta / model.prior_var()) * Matrix::Identity(d, d);
  const Vector b = model.moment() / model.noise_var();
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("MAP oracle system is singular");
  }
  Vector w = ldlt.solve(b);
  if (!w.allFinite()) throw NumericError("MAP oracle system is singular");
  return w;
}

}  // namespace opvi
