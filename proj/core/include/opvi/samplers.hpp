#pragma once

// Per-round update rules. Every step is a synchronous (Jacobi) update: all
// velocities are computed from the pre-update ensemble before any particle moves.

#include <optional>

#include "opvi/core.hpp"
#include "opvi/kernels.hpp"
#include "opvi/schedules.hpp"

namespace opvi {

enum class SamplerKind { opvi, svgd, sgld, online_map };

/// unbiased multiplies the batch likelihood sum by population / B_t;
/// paper_literal uses the plain batch sum.
enum class LikelihoodScaling { unbiased, paper_literal };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::opvi;
  double diffusion_scale = 0.1;
  LikelihoodScaling scaling = LikelihoodScaling::unbiased;
  std::optional<double> projection_radius;

  /// Defaults per kind: diffusion 0.1 for OPVI, 1.0 for SVGD.
  static SamplerConfig defaults_for(SamplerKind kind);
  void validate() const;
};

struct MapState {
  Vector w;
  std::size_t round = 0;
};

double likelihood_scale(const SamplerConfig& cfg, const Minibatch& batch);

/// S * sum_{k in batch} grad log p(d_k | x) + prior_weight * grad log p0(x).
/// Throws NumericError naming the datum when the model returns a non-finite value.
Vector posterior_score(const TargetModel& model, const Vector& x, const Minibatch& batch,
                       double lik_scale, double prior_weight, std::size_t particle = 0);

/// v_i = (1/n) sum_j [K(x_j, x_i) score_j + gamma grad_{x_j} K(x_j, x_i)].
ParticleMatrix kernel_velocity(const ParticleMatrix& x, const ParticleMatrix& scores, double h,
                               double gamma);

ParticleEnsemble opvi_step(const ParticleEnsemble& e, const TargetModel& model,
                           const Minibatch& batch, std::size_t t, const SchedulePack& sched,
                           const SamplerConfig& cfg, const KernelSpec& kern);

/// Baseline SVGD: full (unweighted) prior, diffusion scale from cfg.
ParticleEnsemble svgd_step(const ParticleEnsemble& e, const TargetModel& model,
                           const Minibatch& batch, const SamplerConfig& cfg,
                           const KernelSpec& kern, double alpha);

/// x + (alpha/2) grad log p_hat(x) + N(0, alpha I).
Vector sgld_step(const Vector& x, const TargetModel& model, const Minibatch& batch, double alpha,
                 const SamplerConfig& cfg, CounterEngine& rng);

/// Independent SGLD chains, one per particle, noise from (sgld, t, i) streams.
ParticleEnsemble sgld_ensemble_step(const ParticleEnsemble& e, const TargetModel& model,
                                    const Minibatch& batch, std::size_t t,
                                    const SchedulePack& sched, const SamplerConfig& cfg,
                                    const RngStream& rng);

/// Projected online gradient descent on c_t + eta_t c_0.
MapState online_map_step(const MapState& s, const TargetModel& model, const Minibatch& batch,
                         std::size_t t, const SchedulePack& sched, const SamplerConfig& cfg);

/// Euclidean projection onto the ball of radius R around the origin.
Vector project_ball(const Vector& w, double radius);

}  // namespace opvi
