#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opvi/core.hpp"

namespace opvi {

enum class StreamMode {
  shuffled,    ///< fresh uniform without-replacement batch every round
  sequential,  ///< contiguous slices in index order (cycling if the plan exceeds N_T)
};

/// full: the likelihood covers all N_T data. seen_so_far: round t only sees the
/// first sum_{s<=t} b_s data, and batches are drawn from that prefix.
enum class LikelihoodPopulation { full, seen_so_far };

/// Uniform B-subset of [0, population) in draw order, via a sparse partial
/// Fisher-Yates shuffle. For a fixed engine state the first k draws do not
/// depend on B.
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t b,
                                                    CounterEngine& eng);

class StreamPlan {
 public:
  StreamPlan(StreamMode mode, std::vector<std::size_t> batches, std::size_t n_data,
             LikelihoodPopulation population = LikelihoodPopulation::full,
             std::optional<std::size_t> expected_total = std::nullopt);

  [[nodiscard]] StreamMode mode() const { return mode_; }
  [[nodiscard]] std::size_t rounds() const { return batches_.size(); }
  [[nodiscard]] std::size_t n_data() const { return n_data_; }
  [[nodiscard]] const std::vector<std::size_t>& batches() const { return batches_; }
  [[nodiscard]] std::size_t batch_at(std::size_t t) const { return batches_.at(t - 1); }
  /// Data drawn through round t (inclusive).
  [[nodiscard]] std::size_t consumed_through(std::size_t t) const { return prefix_.at(t); }
  [[nodiscard]] LikelihoodPopulation population_mode() const { return population_; }
  /// Budget the audit checks against: N_T for FITDS plans.
  [[nodiscard]] std::size_t expected_total() const { return expected_total_; }

 private:
  StreamMode mode_;
  std::vector<std::size_t> batches_;
  std::vector<std::size_t> prefix_;
  std::size_t n_data_;
  LikelihoodPopulation population_;
  std::size_t expected_total_;
};

/// Batch for round t (1-based); nullopt once the horizon is exhausted.
/// Deterministic in (seed, t).
std::optional<Minibatch> next_batch(const StreamPlan& plan, std::size_t t, const RngStream& rng);

struct StreamAudit {
  bool pass = false;
  std::size_t total = 0;
  std::size_t expected_total = 0;
  std::size_t rounds = 0;
  std::size_t expected_rounds = 0;
  long long deficit = 0;  ///< expected_total - total
  std::string detail;
};

StreamAudit stream_audit(const StreamPlan& plan, std::span<const Minibatch> emitted);

}  // namespace opvi
