#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "opvi/kernels.hpp"
#include "opvi/metrics.hpp"
#include "opvi/models.hpp"
#include "opvi/samplers.hpp"
#include "opvi/schedules.hpp"
#include "opvi/stream.hpp"

using namespace opvi;

namespace {

ParticleMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  ParticleMatrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  return x;
}

void BM_OpviStepMixture(benchmark::State& state) {
  const MixtureModel model(mixture_generate(10000, 0.0, 1.0, 1));
  const auto n = state.range(0);
  ParticleEnsemble e(gaussian(n, 2, 2));
  SchedulePack sched;
  sched.step = ConstantStep{1e-5};
  const StreamPlan plan(StreamMode::shuffled, std::vector<std::size_t>(1000, 20), 10000);
  const RngStream rng(3);
  std::size_t t = 0;
  for (auto _ : state) {
    t = t % 1000 + 1;
    e = opvi_step(e, model, *next_batch(plan, t, rng), t, sched, SamplerConfig{}, KernelSpec{});
    benchmark::DoNotOptimize(e.positions().data());
  }
}
BENCHMARK(BM_OpviStepMixture)->Arg(20)->Arg(100)->Arg(400);

void BM_KernelVelocity(benchmark::State& state) {
  const auto n = state.range(0);
  const ParticleMatrix x = gaussian(n, 10, 4);
  const ParticleMatrix s = gaussian(n, 10, 5);
  const double h = median_bandwidth(ParticleEnsemble(x));
  for (auto _ : state) benchmark::DoNotOptimize(kernel_velocity(x, s, h, 0.1));
}
BENCHMARK(BM_KernelVelocity)->Arg(20)->Arg(100)->Arg(400);

void BM_EnergyDistance(benchmark::State& state) {
  const ParticleMatrix a = gaussian(100, 2, 6);
  const ParticleMatrix b = gaussian(state.range(0), 2, 7);
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(a, b));
}
BENCHMARK(BM_EnergyDistance)->Arg(1000)->Arg(4000);

void BM_BnnBatchGradient(benchmark::State& state) {
  Dataset data = synthetic_regression(2000, 8);
  const auto st = Standardizer::fit(data, BnnTask::regression);
  const BnnModel model({8, 50, 1, Activation::tanh, BnnTask::regression}, st.apply(data, BnnTask::regression));
  Vector w = gaussian(1, static_cast<Eigen::Index>(model.dim()), 9).row(0).transpose() * 0.1;
  std::vector<std::size_t> batch(static_cast<std::size_t>(state.range(0)));
  std::iota(batch.begin(), batch.end(), 0);
  Vector out(w.size());
  for (auto _ : state) {
    out.setZero();
    model.accumulate_grad_log_lik(w, batch, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_BnnBatchGradient)->Arg(20)->Arg(200);

void BM_FitdsPlan(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fitds_plan(10000, static_cast<std::size_t>(state.range(0)), PowerBatch{0.55}));
}
BENCHMARK(BM_FitdsPlan)->Arg(500)->Arg(5000);

}  // namespace
BENCHMARK_MAIN();
