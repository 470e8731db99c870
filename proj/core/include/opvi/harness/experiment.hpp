#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opvi/harness/config.hpp"
#include "opvi/metrics.hpp"
#include "opvi/models.hpp"
#include "opvi/stream.hpp"

namespace opvi {

/// Model plus the data it was built from. Depends only on the model/data keys
/// of a config, so one Problem can serve every sampler seed.
struct Problem {
  std::shared_ptr<const TargetModel> model;
  std::shared_ptr<const MixtureModel> mixture;
  std::shared_ptr<const LinRegModel> linreg;
  std::shared_ptr<const BnnModel> bnn;
  /// BNN test split: standardized features, targets in original units.
  std::optional<Dataset> test;
};

Problem build_problem(const ExperimentConfig& cfg);

/// Batch sizes for the run. FITDS plans sum to N_T; otherwise the raw schedule
/// is used and the audit checks against its own sum.
StreamPlan build_stream_plan(const ExperimentConfig& cfg, std::size_t n_data);

/// Grid oracle for the mixture; reference draws use the data seed only.
MixtureGrid build_grid(const ExperimentConfig& cfg, const MixtureModel& model);

struct RunOptions {
  bool write_artifacts = true;
  const Problem* problem = nullptr;  ///< reuse a prebuilt problem
  const MixtureGrid* grid = nullptr; ///< reuse a prebuilt grid oracle
};

struct RunResult {
  std::vector<RoundTrace> trace;
  ParticleMatrix final_particles;
  StreamAudit audit;
  std::vector<double> error_budget;  ///< cumulative E_t, when diag_grad_error
  std::vector<double> regret;        ///< cumulative R(t), when diag_regret
  std::optional<double> error_budget_exponent;
  std::optional<double> regret_exponent;
  std::optional<double> path_variation;
  std::optional<FpcValidation> fpc;
  std::optional<PredictiveMetrics> predictive;
  double wallclock_ms = 0.0;
  std::filesystem::path run_dir;  ///< empty when artifacts are not written
  std::string summary;
};

/// Runs T rounds of next_batch, sampler step and metrics. Grad error,
/// objective and regret are taken at the pre-update ensemble mean; energy
/// distance and predictive metrics at the post-update ensemble. A non-finite
/// value aborts with NumericError naming the round; partial artifacts are kept.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Fresh run-YYYYmmdd-HHMMSS[-k] directory under root; never reuses one.
std::filesystem::path create_run_dir(const std::filesystem::path& root);

}  // namespace opvi
