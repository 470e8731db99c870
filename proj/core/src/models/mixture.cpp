#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "opvi/models.hpp"
#include "opvi/parallel.hpp"

namespace opvi {

namespace {
constexpr double kLogHalf = -0.69314718055994530942;

double log_normal_const(double sigma) {
  return -std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// log(1 + exp(d)) without overflow.
double softplus(double d) { return d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d)); }

// Responsibilities of the two components given d = l2 - l1.
void responsibilities(double d, double& r1, double& r2) {
  if (d >= 0.0) {
    const double e = std::exp(-d);
    r2 = 1.0 / (1.0 + e);
    r1 = e / (1.0 + e);
  } else {
    const double e = std::exp(d);
    r2 = e / (1.0 + e);
    r1 = 1.0 / (1.0 + e);
  }
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
}  // namespace

std::vector<double> mixture_generate(std::size_t n, double theta1, double theta2,
                                     std::uint64_t seed, double sigma_x) {
  if (n < 1) throw ConfigError("mixture_generate needs n >= 1");
  const RngStream rng(seed);
  auto eng = rng.engine(RngRole::data, 0, 0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, sigma_x);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double centre = coin(eng) ? theta1 + theta2 : theta1;
    x = centre + normal(eng);
  }
  return out;
}

double mixture_log_lik(double theta1, double theta2, double x, double sigma_x) {
  const double var = sigma_x * sigma_x;
  const double u = x - theta1;
  const double v = u - theta2;
  const double l1 = -u * u / (2.0 * var);
  const double l2 = -v * v / (2.0 * var);
  const double hi = std::max(l1, l2);
  return kLogHalf + log_normal_const(sigma_x) + hi + std::log1p(std::exp(-std::abs(l1 - l2)));
}

std::array<double, 2> mixture_grad_log_lik(double theta1, double theta2, double x,
                                           double sigma_x) {
  const double var = sigma_x * sigma_x;
  const double u = x - theta1;
  const double v = u - theta2;
  double r1 = 0.0;
  double r2 = 0.0;
  responsibilities((u * u - v * v) / (2.0 * var), r1, r2);
  return {(r1 * u + r2 * v) / var, r2 * v / var};
}

MixtureModel::MixtureModel(std::vector<double> data, MixtureParams params)
    : data_(std::move(data)), params_(params) {
  if (data_.empty()) throw ConfigError("mixture model needs data");
  if (!(params_.prior_var1 > 0.0 && params_.prior_var2 > 0.0 && params_.sigma_x > 0.0)) {
    throw ConfigError("mixture variances must be > 0");
  }
}

double MixtureModel::log_prior(const Vector& w) const {
  return -0.5 * (w(0) * w(0) / params_.prior_var1 + w(1) * w(1) / params_.prior_var2) -
         std::log(2.0 * std::numbers::pi) - 0.5 * std::log(params_.prior_var1 * params_.prior_var2);
}

Vector MixtureModel::grad_log_prior(const Vector& w) const {
  return Vector{{-w(0) / params_.prior_var1, -w(1) / params_.prior_var2}};
}

double MixtureModel::log_lik(const Vector& w, std::size_t k) const {
  return mixture_log_lik(w(0), w(1), data_.at(k), params_.sigma_x);
}

Vector MixtureModel::grad_log_lik(const Vector& w, std::size_t k) const {
  const auto g = mixture_grad_log_lik(w(0), w(1), data_.at(k), params_.sigma_x);
  return Vector{{g[0], g[1]}};
}

void MixtureModel::accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                                           Vector& out) const {
  double g0 = 0.0;
  double g1 = 0.0;
  for (std::size_t k : indices) {
    const auto g = mixture_grad_log_lik(w(0), w(1), data_[k], params_.sigma_x);
    g0 += g[0];
    g1 += g[1];
  }
  out(0) += g0;
  out(1) += g1;
}

Vector MixtureModel::full_grad_log_lik(const Vector& w) const {
  double g0 = 0.0;
  double g1 = 0.0;
  for (double x : data_) {
    const auto g = mixture_grad_log_lik(w(0), w(1), x, params_.sigma_x);
    g0 += g[0];
    g1 += g[1];
  }
  return Vector{{g0, g1}};
}

double MixtureModel::full_log_lik(const Vector& w) const {
  double s = 0.0;
  for (double x : data_) s += mixture_log_lik(w(0), w(1), x, params_.sigma_x);
  return s;
}

double MixtureGrid::theta1_at(std::size_t i) const {
  const double step = (window.theta1_hi - window.theta1_lo) / static_cast<double>(resolution);
  return window.theta1_lo + (static_cast<double>(i) + 0.5) * step;
}

double MixtureGrid::theta2_at(std::size_t i) const {
  const double step = (window.theta2_hi - window.theta2_lo) / static_cast<double>(resolution);
  return window.theta2_lo + (static_cast<double>(i) + 0.5) * step;
}

Vector MixtureGrid::mean() const {
  Vector m = Vector::Zero(2);
  for (std::size_t r = 0; r < resolution; ++r) {
    for (std::size_t c = 0; c < resolution; ++c) {
      const double p = cell_mass(r, c);
      m(0) += p * theta1_at(c);
      m(1) += p * theta2_at(r);
    }
  }
  return m;
}

double prior_mass_in_window(const MixtureParams& params, const GridWindow& window) {
  const double s1 = std::sqrt(params.prior_var1);
  const double s2 = std::sqrt(params.prior_var2);
  const double m1 = standard_normal_cdf(window.theta1_hi / s1) - standard_normal_cdf(window.theta1_lo / s1);
  const double m2 = standard_normal_cdf(window.theta2_hi / s2) - standard_normal_cdf(window.theta2_lo / s2);
  return m1 * m2;
}

MixtureGrid mixture_posterior_grid(const MixtureModel& model, std::size_t resolution,
                                   const GridWindow& window, std::size_t reference_size,
                                   const RngStream& rng) {
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
  if (!(window.theta1_lo < window.theta1_hi && window.theta2_lo < window.theta2_hi)) {
    throw ConfigError("grid window bounds must satisfy lo < hi");
  }
  MixtureGrid grid;
  grid.window = window;
  grid.resolution = resolution;
  grid.window_warning = prior_mass_in_window(model.params(), window) <= 0.001;
  const auto res = static_cast<Eigen::Index>(resolution);
  grid.log_density.resize(res, res);

  // log p(x | theta) = const - u^2 / (2 var) + softplus((u^2 - (u - theta2)^2) / (2 var))
  // with u = x - theta1; the quadratic part sums in closed form.
  const auto& data = model.data();
  const double var = model.params().sigma_x * model.params().sigma_x;
  const double n = static_cast<double>(data.size());
  double sum_x = 0.0;
  double sum_x2 = 0.0;
  for (double x : data) {
    sum_x += x;
    sum_x2 += x * x;
  }
  const double per_datum_const = kLogHalf + log_normal_const(model.params().sigma_x);

  parallel_for(resolution, [&](std::size_t r) {
    const double t2 = grid.theta2_at(r);
    const double slope = t2 / var;
    for (std::size_t c = 0; c < resolution; ++c) {
      const double t1 = grid.theta1_at(c);
      const double centre = t1 + 0.5 * t2;
      double soft = 0.0;
      for (double x : data) soft += softplus(slope * (x - centre));
      const double quad = -(sum_x2 - 2.0 * t1 * sum_x + n * t1 * t1) / (2.0 * var);
      const Vector theta{{t1, t2}};
      grid.log_density(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          model.log_prior(theta) + n * per_datum_const + quad + soft;
    }
  });

  const double peak = grid.log_density.maxCoeff();
  grid.cell_mass = (grid.log_density.array() - peak).exp().matrix();
  grid.cell_mass /= grid.cell_mass.sum();

  // Multinomial resampling over cells (row-major order) plus uniform jitter.
  std::vector<double> cumulative(resolution * resolution);
  double acc = 0.0;
  for (std::size_t r = 0; r < resolution; ++r) {
    for (std::size_t c = 0; c < resolution; ++c) {
      acc += grid.cell_mass(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      cumulative[r * resolution + c] = acc;
    }
  }
  const double step1 = (window.theta1_hi - window.theta1_lo) / static_cast<double>(resolution);
  const double step2 = (window.theta2_hi - window.theta2_lo) / static_cast<double>(resolution);
  grid.reference.resize(static_cast<Eigen::Index>(reference_size), 2);
  auto eng = rng.engine(RngRole::grid, 0, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < reference_size; ++s) {
    const double u = unit(eng) * acc;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const auto cell = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    const std::size_t r = cell / resolution;
    const std::size_t c = cell % resolution;
    const auto row = static_cast<Eigen::Index>(s);
    grid.reference(row, 0) = grid.theta1_at(c) + (unit(eng) - 0.5) * step1;
    grid.reference(row, 1) = grid.theta2_at(r) + (unit(eng) - 0.5) * step2;
  }
  return grid;
}

}  // namespace opvi
