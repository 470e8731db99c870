#pragma once

#include "opvi/core.hpp"

namespace opvi {

/// Exponential kernel K(x, y) = exp(-|x - y|^2 / h). Note the bandwidth divides
/// the squared distance directly (h has units of length squared).
struct KernelSpec {
  enum class Bandwidth { fixed, median };
  Bandwidth mode = Bandwidth::median;
  double h = 1.0;

  void validate() const;
  static KernelSpec fixed(double h) { return {Bandwidth::fixed, h}; }
  static KernelSpec median() { return {Bandwidth::median, 1.0}; }
};

using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

double kernel_eval(const ConstVectorRef& x, const ConstVectorRef& y, double h);

/// Gradient of K(x, y) with respect to x: (-2/h)(x - y) K(x, y).
Vector kernel_grad_x(const ConstVectorRef& x, const ConstVectorRef& y, double h);

/// med^2 / log(n + 1) over pairwise Euclidean distances; 1.0 when n = 1 or the
/// median distance is zero.
double median_bandwidth(const ParticleEnsemble& e);

/// Bandwidth for this round: fixed h, or the median heuristic on e.
double resolve_bandwidth(const KernelSpec& spec, const ParticleEnsemble& e);

/// n x n Gram matrix K(x_i, x_j).
Matrix gram_matrix(const ParticleMatrix& x, double h);

}  // namespace opvi
