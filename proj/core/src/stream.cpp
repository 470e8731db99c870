#include "opvi/stream.hpp"

#include <numeric>
#include <random>
#include <unordered_map>

namespace opvi {

std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t b,
                                                    CounterEngine& eng) {
  if (b > population) throw ConfigError("cannot draw more indices than the population holds");
  std::vector<std::size_t> out(b);
  std::unordered_map<std::size_t, std::size_t> swapped;
  swapped.reserve(2 * b);
  auto at = [&](std::size_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    const std::size_t j = pick(eng);
    const std::size_t vi = at(i);
    const std::size_t vj = at(j);
    swapped[j] = vi;
    swapped[i] = vj;
    out[i] = vj;
  }
  return out;
}

StreamPlan::StreamPlan(StreamMode mode, std::vector<std::size_t> batches, std::size_t n_data,
                       LikelihoodPopulation population, std::optional<std::size_t> expected_total)
    : mode_(mode), batches_(std::move(batches)), n_data_(n_data), population_(population) {
  if (batches_.empty()) throw ConfigError("stream plan needs at least one round");
  if (n_data_ < 1) throw ConfigError("stream plan needs data");
  prefix_.assign(batches_.size() + 1, 0);
  for (std::size_t t = 0; t < batches_.size(); ++t) {
    if (batches_[t] < 1 || batches_[t] > n_data_) throw ConfigError("batch sizes must lie in [1, N_T]");
    prefix_[t + 1] = prefix_[t] + batches_[t];
  }
  expected_total_ = expected_total.value_or(prefix_.back());
}

std::optional<Minibatch> next_batch(const StreamPlan& plan, std::size_t t, const RngStream& rng) {
  if (t < 1 || t > plan.rounds()) return std::nullopt;
  const std::size_t b = plan.batch_at(t);
  const std::size_t n = plan.n_data();
  std::size_t population = n;
  if (plan.population_mode() == LikelihoodPopulation::seen_so_far) {
    population = std::min(n, std::max(b, plan.consumed_through(t)));
  }
  Minibatch mb;
  mb.population = population;
  if (plan.mode() == StreamMode::sequential) {
    const std::size_t start = plan.consumed_through(t - 1);
    mb.indices.resize(b);
    for (std::size_t i = 0; i < b; ++i) mb.indices[i] = (start + i) % n;
  } else {
    auto eng = rng.engine(RngRole::stream, t, 0);
    mb.indices = sample_without_replacement(population, b, eng);
  }
  return mb;
}

StreamAudit stream_audit(const StreamPlan& plan, std::span<const Minibatch> emitted) {
  StreamAudit a;
  a.expected_total = plan.expected_total();
  a.expected_rounds = plan.rounds();
  a.rounds = emitted.size();
  for (const auto& mb : emitted) a.total += mb.indices.size();
  a.deficit = static_cast<long long>(a.expected_total) - static_cast<long long>(a.total);
  a.pass = a.total == a.expected_total && a.rounds == a.expected_rounds;
  if (a.pass) {
    a.detail = "ok: " + std::to_string(a.total) + " samples over " + std::to_string(a.rounds) + " rounds";
  } else {
    a.detail = "violation: " + std::to_string(a.total) + "/" + std::to_string(a.expected_total) +
               " samples, " + std::to_string(a.rounds) + "/" + std::to_string(a.expected_rounds) +
               " rounds, deficit " + std::to_string(a.deficit);
  }
  return a;
}

}  // namespace opvi
