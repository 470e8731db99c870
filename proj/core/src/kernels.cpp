#include "opvi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace opvi {

void KernelSpec::validate() const {
  if (mode == Bandwidth::fixed && !(h > 0.0 && std::isfinite(h))) {
    throw ConfigError("fixed kernel bandwidth must be a finite positive number");
  }
}

namespace {
void check_inputs(const ConstVectorRef& x, const ConstVectorRef& y, double h) {
  if (x.size() != y.size()) throw ConfigError("kernel inputs differ in length");
  if (!(h > 0.0) || !std::isfinite(h)) throw NumericError("kernel bandwidth must be finite and > 0");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("kernel input is not finite");
}
}  // namespace

double kernel_eval(const ConstVectorRef& x, const ConstVectorRef& y, double h) {
  check_inputs(x, y, h);
  return std::exp(-(x - y).squaredNorm() / h);
}

Vector kernel_grad_x(const ConstVectorRef& x, const ConstVectorRef& y, double h) {
  check_inputs(x, y, h);
  const double k = std::exp(-(x - y).squaredNorm() / h);
  return (-2.0 / h) * k * (x - y);
}

double median_bandwidth(const ParticleEnsemble& e) {
  const auto& x = e.positions();
  const Eigen::Index n = x.rows();
  if (n < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) dists.push_back((x.row(i) - x.row(j)).norm());
  }
  const std::size_t m = dists.size();
  const std::size_t mid = m / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double med = dists[mid];
  if (m % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) return 1.0;
  return med * med / std::log(static_cast<double>(n) + 1.0);
}

double resolve_bandwidth(const KernelSpec& spec, const ParticleEnsemble& e) {
  return spec.mode == KernelSpec::Bandwidth::fixed ? spec.h : median_bandwidth(e);
}

Matrix gram_matrix(const ParticleMatrix& x, double h) {
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / h);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace opvi
