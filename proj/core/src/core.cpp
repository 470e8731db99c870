#include "opvi/core.hpp"

#include <random>

namespace opvi {

bool all_finite(const Eigen::Ref<const Vector>& v) { return v.allFinite(); }

ParticleEnsemble::ParticleEnsemble(ParticleMatrix positions, std::size_t round)
    : positions_(std::move(positions)), round_(round) {
  if (positions_.rows() < 1 || positions_.cols() < 1) {
    throw ConfigError("ensemble needs at least one particle and one dimension");
  }
  if (!positions_.allFinite()) {
    throw NumericError("ensemble contains non-finite coordinates");
  }
}

ParticleEnsemble ParticleEnsemble::advanced(ParticleMatrix next) const {
  if (next.rows() != positions_.rows() || next.cols() != positions_.cols()) {
    throw ConfigError("ensemble shape changed during a run");
  }
  for (Eigen::Index i = 0; i < next.rows(); ++i) {
    if (!next.row(i).allFinite()) {
      throw NumericError("round " + std::to_string(round_ + 1) + ": particle " +
                         std::to_string(i) + " has non-finite coordinates");
    }
  }
  return ParticleEnsemble(std::move(next), round_ + 1);
}

ParticleEnsemble init_ensemble(std::size_t n, std::size_t dim, const InitSpec& init,
                               const RngStream& rng) {
  if (n < 1 || dim < 1) throw ConfigError("init_ensemble: n and dim must be >= 1");
  ParticleMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));

  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, StandardNormalInit>) {
          if (!(spec.scale > 0.0)) throw ConfigError("normal init scale must be > 0");
          for (std::size_t i = 0; i < n; ++i) {
            auto eng = rng.engine(RngRole::init, 0, i);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t d = 0; d < dim; ++d) x(i, d) = spec.scale * normal(eng);
          }
        } else if constexpr (std::is_same_v<T, UniformBoxInit>) {
          if (!(spec.low < spec.high)) {
            throw ConfigError("uniform init box needs low < high");
          }
          for (std::size_t i = 0; i < n; ++i) {
            auto eng = rng.engine(RngRole::init, 0, i);
            std::uniform_real_distribution<double> uniform(spec.low, spec.high);
            for (std::size_t d = 0; d < dim; ++d) x(i, d) = uniform(eng);
          }
        } else {
          if (static_cast<std::size_t>(spec.point.size()) != dim) {
            throw ConfigError("point-mass init has wrong dimension");
          }
          for (std::size_t i = 0; i < n; ++i) x.row(i) = spec.point.transpose();
        }
      },
      init);
  return ParticleEnsemble(std::move(x), 0);
}

Vector ensemble_mean(const ParticleEnsemble& e) {
  return e.positions().colwise().mean().transpose();
}

void TargetModel::accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices,
                                          Vector& out) const {
  for (std::size_t k : indices) out += grad_log_lik(w, k);
}

Vector TargetModel::full_grad_log_lik(const Vector& w) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dim()));
  for (std::size_t k = 0; k < n_data(); ++k) g += grad_log_lik(w, k);
  return g;
}

double TargetModel::full_log_lik(const Vector& w) const {
  double s = 0.0;
  for (std::size_t k = 0; k < n_data(); ++k) s += log_lik(w, k);
  return s;
}

}  // namespace opvi
