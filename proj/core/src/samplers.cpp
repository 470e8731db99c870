#include "opvi/samplers.hpp"

#include <cmath>
#include <random>
#include <string>

#include "opvi/parallel.hpp"

namespace opvi {

SamplerConfig SamplerConfig::defaults_for(SamplerKind kind) {
  SamplerConfig cfg;
  cfg.kind = kind;
  cfg.diffusion_scale = kind == SamplerKind::opvi ? 0.1 : 1.0;
  return cfg;
}

void SamplerConfig::validate() const {
  if (!(diffusion_scale >= 0.0) || !std::isfinite(diffusion_scale)) {
    throw ConfigError("diffusion scale must be finite and >= 0");
  }
  if (projection_radius && !(*projection_radius > 0.0)) {
    throw ConfigError("projection radius must be > 0");
  }
}

double likelihood_scale(const SamplerConfig& cfg, const Minibatch& batch) {
  if (cfg.scaling == LikelihoodScaling::paper_literal || batch.indices.empty()) return 1.0;
  return static_cast<double>(batch.population) / static_cast<double>(batch.indices.size());
}

Vector posterior_score(const TargetModel& model, const Vector& x, const Minibatch& batch,
                       double lik_scale, double prior_w, std::size_t particle) {
  Vector lik = Vector::Zero(x.size());
  model.accumulate_grad_log_lik(x, batch.indices, lik);
  if (!lik.allFinite()) {
    for (std::size_t k : batch.indices) {
      if (!model.grad_log_lik(x, k).allFinite()) {
        throw NumericError("non-finite likelihood gradient at particle " + std::to_string(particle) +
                           ", datum " + std::to_string(k));
      }
    }
    throw NumericError("likelihood gradient sum overflowed at particle " + std::to_string(particle));
  }
  const Vector prior = model.grad_log_prior(x);
  if (!prior.allFinite()) {
    throw NumericError("non-finite prior gradient at particle " + std::to_string(particle));
  }
  return lik_scale * lik + prior_w * prior;
}

ParticleMatrix kernel_velocity(const ParticleMatrix& x, const ParticleMatrix& scores, double h,
                               double gamma) {
  const Eigen::Index n = x.rows();
  const Matrix k = gram_matrix(x, h);
  ParticleMatrix v(n, x.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  const double repulse = -2.0 / h;
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double kji = k(j, i);
      acc += kji * scores.row(j);
      if (gamma != 0.0) acc += (gamma * repulse * kji) * (x.row(j) - x.row(i));
    }
    v.row(i) = inv_n * acc;
  });
  return v;
}

namespace {
ParticleMatrix ensemble_scores(const ParticleEnsemble& e, const TargetModel& model,
                               const Minibatch& batch, double lik_scale, double prior_w) {
  if (e.dim() != model.dim()) throw ConfigError("ensemble dimension does not match model");
  ParticleMatrix scores(static_cast<Eigen::Index>(e.size()), static_cast<Eigen::Index>(e.dim()));
  parallel_for(e.size(), [&](std::size_t i) {
    scores.row(static_cast<Eigen::Index>(i)) =
        posterior_score(model, e.particle(i), batch, lik_scale, prior_w, i).transpose();
  });
  return scores;
}

ParticleEnsemble kernel_step(const ParticleEnsemble& e, const TargetModel& model,
                             const Minibatch& batch, double lik_scale, double prior_w,
                             double gamma, double alpha, const KernelSpec& kern) {
  const ParticleMatrix scores = ensemble_scores(e, model, batch, lik_scale, prior_w);
  const double h = resolve_bandwidth(kern, e);
  const ParticleMatrix v = kernel_velocity(e.positions(), scores, h, gamma);
  return e.advanced(e.positions() + alpha * v);
}
}  // namespace

ParticleEnsemble opvi_step(const ParticleEnsemble& e, const TargetModel& model,
                           const Minibatch& batch, std::size_t t, const SchedulePack& sched,
                           const SamplerConfig& cfg, const KernelSpec& kern) {
  return kernel_step(e, model, batch, likelihood_scale(cfg, batch), prior_weight(t, sched.prior_weight),
                     cfg.diffusion_scale, step_size(t, sched.step), kern);
}

ParticleEnsemble svgd_step(const ParticleEnsemble& e, const TargetModel& model,
                           const Minibatch& batch, const SamplerConfig& cfg,
                           const KernelSpec& kern, double alpha) {
  return kernel_step(e, model, batch, likelihood_scale(cfg, batch), 1.0, cfg.diffusion_scale, alpha,
                     kern);
}

Vector sgld_step(const Vector& x, const TargetModel& model, const Minibatch& batch, double alpha,
                 const SamplerConfig& cfg, CounterEngine& rng) {
  if (!(alpha > 0.0)) throw ConfigError("SGLD step size must be > 0");
  const Vector score = posterior_score(model, x, batch, likelihood_scale(cfg, batch), 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_sd = std::sqrt(alpha);
  Vector out = x + (0.5 * alpha) * score;
  for (Eigen::Index d = 0; d < out.size(); ++d) out(d) += noise_sd * normal(rng);
  return out;
}

ParticleEnsemble sgld_ensemble_step(const ParticleEnsemble& e, const TargetModel& model,
                                    const Minibatch& batch, std::size_t t,
                                    const SchedulePack& sched, const SamplerConfig& cfg,
                                    const RngStream& rng) {
  const double alpha = step_size(t, sched.step);
  ParticleMatrix next(e.positions().rows(), e.positions().cols());
  parallel_for(e.size(), [&](std::size_t i) {
    auto eng = rng.engine(RngRole::sgld, t, i);
    next.row(static_cast<Eigen::Index>(i)) =
        sgld_step(e.particle(i), model, batch, alpha, cfg, eng).transpose();
  });
  return e.advanced(std::move(next));
}

MapState online_map_step(const MapState& s, const TargetModel& model, const Minibatch& batch,
                         std::size_t t, const SchedulePack& sched, const SamplerConfig& cfg) {
  const double alpha = step_size(t, sched.step);
  const double eta = prior_weight(t, sched.prior_weight);
  // grad(c_hat_t + eta c_0) is the negated posterior score.
  const Vector cost_grad = -posterior_score(model, s.w, batch, likelihood_scale(cfg, batch), eta);
  Vector w = s.w - alpha * cost_grad;
  if (cfg.projection_radius) w = project_ball(w, *cfg.projection_radius);
  if (!w.allFinite()) {
    throw NumericError("round " + std::to_string(t) + ": MAP iterate became non-finite");
  }
  return {std::move(w), s.round + 1};
}

Vector project_ball(const Vector& w, double radius) {
  if (!(radius > 0.0)) throw ConfigError("projection radius must be > 0");
  const double norm = w.norm();
  if (norm <= radius) return w;
  return w * (radius / norm);
}

}  // namespace opvi
