#include "opvi/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "opvi/core.hpp"

namespace opvi {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Round up, absorbing roundoff on values that are mathematically integral.
std::size_t ceil_count(double value) {
  const double c = std::ceil(value - 1e-9 * std::max(1.0, std::abs(value)));
  return c < 1.0 ? 1 : static_cast<std::size_t>(c);
}
}  // namespace

void SchedulePack::validate(std::size_t n_data) const {
  std::visit(overloaded{
                 [&](const StaticBatch& s) {
                   if (s.size < 1 || s.size > n_data) {
                     throw ConfigError("static batch size must lie in [1, N_T]");
                   }
                 },
                 [](const PowerBatch& s) {
                   if (!(s.rho > 0.0)) throw ConfigError("batch exponent rho must be > 0");
                 },
                 [](const SaturatingBatch& s) {
                   if (!(s.rho > 0.0)) throw ConfigError("batch exponent rho must be > 0");
                 },
                 [](const FullBatch&) {},
             },
             batch);
  std::visit(overloaded{
                 [](const InverseSquarePriorWeight&) {},
                 [](const UniformPriorWeight& s) {
                   if (s.horizon < 1) throw ConfigError("uniform prior weight needs T >= 1");
                 },
                 [](const ConstantPriorWeight& s) {
                   if (!(s.value > 0.0 && s.value <= 1.0)) {
                     throw ConfigError("constant prior weight must lie in (0, 1]");
                   }
                 },
             },
             prior_weight);
  std::visit(overloaded{
                 [](const ConstantStep& s) {
                   if (!(s.alpha0 > 0.0)) throw ConfigError("step size must be > 0");
                 },
                 [](const DecayingStep& s) {
                   if (!(s.alpha0 > 0.0)) throw ConfigError("step size must be > 0");
                   if (!std::isfinite(s.kappa)) throw ConfigError("step decay must be finite");
                 },
             },
             step);
}

std::size_t batch_size(std::size_t t, std::size_t n_data, const BatchSchedule& spec) {
  const double tt = static_cast<double>(std::max<std::size_t>(t, 1));
  const double n = static_cast<double>(n_data);
  const std::size_t raw = std::visit(
      overloaded{
          [](const StaticBatch& s) { return s.size; },
          [&](const PowerBatch& s) { return ceil_count(std::pow(tt, s.rho)); },
          [&](const SaturatingBatch& s) {
            const double p = std::pow(tt, s.rho);
            return ceil_count(n * p / (n + p));
          },
          [&](const FullBatch&) { return n_data; },
      },
      spec);
  return std::clamp<std::size_t>(raw, 1, std::max<std::size_t>(n_data, 1));
}

double prior_weight(std::size_t t, const PriorWeightSchedule& spec) {
  const double tt = static_cast<double>(std::max<std::size_t>(t, 1));
  return std::visit(overloaded{
                        [&](const InverseSquarePriorWeight&) {
                          return 6.0 / (std::numbers::pi * std::numbers::pi * tt * tt);
                        },
                        [](const UniformPriorWeight& s) { return 1.0 / static_cast<double>(s.horizon); },
                        [](const ConstantPriorWeight& s) { return s.value; },
                    },
                    spec);
}

double step_size(std::size_t t, const StepSchedule& spec) {
  const double tt = static_cast<double>(std::max<std::size_t>(t, 1));
  return std::visit(overloaded{
                        [](const ConstantStep& s) { return s.alpha0; },
                        [&](const DecayingStep& s) { return s.alpha0 * std::pow(tt, -s.kappa); },
                    },
                    spec);
}

std::vector<std::size_t> fitds_plan(std::size_t n_data, std::size_t rounds,
                                    const BatchSchedule& spec) {
  if (rounds < 1) throw ConfigError("FITDS plan needs at least one round");
  if (n_data < rounds) {
    throw ConfigError("FITDS budget infeasible: N_T = " + std::to_string(n_data) +
                      " is smaller than T = " + std::to_string(rounds));
  }
  if (std::holds_alternative<FullBatch>(spec)) {
    throw ConfigError("full-batch runs do not follow a FITDS budget");
  }
  std::vector<std::size_t> plan(rounds);
  for (std::size_t t = 1; t <= rounds; ++t) plan[t - 1] = batch_size(t, n_data, spec);
  const std::size_t total = std::accumulate(plan.begin(), plan.end(), std::size_t{0});

  if (total > n_data) {
    // Smallest cap c with sum(min(b_t, c)) >= N_T, then trim the earliest
    // capped rounds by one so the capped block stays nondecreasing.
    auto capped_sum = [&](std::size_t c) {
      std::size_t s = 0;
      for (std::size_t b : plan) s += std::min(b, c);
      return s;
    };
    std::size_t lo = 1;
    std::size_t hi = *std::max_element(plan.begin(), plan.end());
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (capped_sum(mid) >= n_data) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const std::size_t cap = lo;
    std::size_t excess = capped_sum(cap) - n_data;
    for (auto& b : plan) b = std::min(b, cap);
    for (std::size_t i = 0; i < rounds && excess > 0; ++i) {
      if (plan[i] == cap && cap > 1) {
        --plan[i];
        --excess;
      }
    }
  } else if (total < n_data) {
    // Pad only the second half of the horizon, last round first.
    const std::size_t deficit = n_data - total;
    const std::size_t window = (rounds + 1) / 2;
    const std::size_t first = rounds - window;
    const std::size_t passes = deficit / window;
    const std::size_t rest = deficit % window;
    for (std::size_t i = first; i < rounds; ++i) {
      plan[i] += passes + (i >= rounds - rest ? 1 : 0);
    }
  }
  return plan;
}

std::string describe(const BatchSchedule& spec) {
  return std::visit(overloaded{
                        [](const StaticBatch& s) { return "static(" + std::to_string(s.size) + ")"; },
                        [](const PowerBatch& s) { return "power(" + std::to_string(s.rho) + ")"; },
                        [](const SaturatingBatch& s) {
                          return "saturating(" + std::to_string(s.rho) + ")";
                        },
                        [](const FullBatch&) { return std::string("full"); },
                    },
                    spec);
}

}  // namespace opvi
