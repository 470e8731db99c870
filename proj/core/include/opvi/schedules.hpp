#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace opvi {

struct StaticBatch {
  std::size_t size = 20;
};
/// ceil(t^rho).
struct PowerBatch {
  double rho = 0.55;
};
/// ceil(N t^rho / (N + t^rho)); then 1/B_t - 1/N = t^-rho exactly.
struct SaturatingBatch {
  double rho = 0.55;
};
struct FullBatch {};
using BatchSchedule = std::variant<StaticBatch, PowerBatch, SaturatingBatch, FullBatch>;

/// 6 / (pi^2 t^2); the weights sum to 1 over an infinite horizon.
struct InverseSquarePriorWeight {};
struct UniformPriorWeight {
  std::size_t horizon = 1;
};
struct ConstantPriorWeight {
  double value = 1.0;
};
using PriorWeightSchedule = std::variant<InverseSquarePriorWeight, UniformPriorWeight, ConstantPriorWeight>;

struct ConstantStep {
  double alpha0 = 0.1;
};
/// alpha0 * t^-kappa. kappa is signed: a negative value grows with t.
struct DecayingStep {
  double alpha0 = 0.1;
  double kappa = 0.55;
};
using StepSchedule = std::variant<ConstantStep, DecayingStep>;

struct SchedulePack {
  BatchSchedule batch = PowerBatch{};
  PriorWeightSchedule prior_weight = InverseSquarePriorWeight{};
  StepSchedule step = ConstantStep{};

  void validate(std::size_t n_data) const;
};

std::size_t batch_size(std::size_t t, std::size_t n_data, const BatchSchedule& spec);
double prior_weight(std::size_t t, const PriorWeightSchedule& spec);
double step_size(std::size_t t, const StepSchedule& spec);

/// FITDS plan: T batch sizes, each >= 1, summing to exactly n_data. The raw
/// schedule is evaluated first; any excess is removed by lowering the largest
/// (tail) rounds and any deficit is spread over the second half, last round first.
std::vector<std::size_t> fitds_plan(std::size_t n_data, std::size_t rounds,
                                    const BatchSchedule& spec);

std::string describe(const BatchSchedule& spec);

}  // namespace opvi
