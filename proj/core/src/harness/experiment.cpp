#include "opvi/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include "opvi/harness/svg.hpp"
#include "opvi/harness/trace_io.hpp"
#include "opvi/samplers.hpp"

namespace opvi {

Problem build_problem(const ExperimentConfig& cfg) {
  Problem p;
  switch (cfg.model) {
    case ModelKind::mixture: {
      auto m = std::make_shared<MixtureModel>(
          mixture_generate(cfg.n_data, cfg.mixture_theta1, cfg.mixture_theta2, cfg.data_seed));
      p.mixture = m;
      p.model = m;
      break;
    }
    case ModelKind::linreg: {
      auto m = std::make_shared<LinRegModel>(linreg_generate(cfg.n_data, cfg.linreg_dim, cfg.data_seed,
                                                             cfg.linreg_noise_var, cfg.linreg_prior_var));
      p.linreg = m;
      p.model = m;
      break;
    }
    case ModelKind::bnn_regression:
    case ModelKind::bnn_classification: {
      const BnnTask task = cfg.bnn_task();
      Dataset all;
      if (!cfg.dataset.empty()) {
        all = load_csv_dataset(cfg.dataset, task);
        if (cfg.n_data > 0 && cfg.n_data < all.size()) {
          all.features.conservativeResize(static_cast<Eigen::Index>(cfg.n_data), Eigen::NoChange);
          all.targets.conservativeResize(static_cast<Eigen::Index>(cfg.n_data));
        }
      } else if (task == BnnTask::regression) {
        all = synthetic_regression(cfg.n_data, cfg.data_seed);
      } else {
        all = synthetic_classification(cfg.n_data, cfg.bnn_features, cfg.bnn_classes, cfg.data_seed);
      }
      const DatasetSplit split = split_dataset(all, cfg.test_fraction, RngStream(cfg.data_seed));
      const Standardizer st = Standardizer::fit(split.train, task);
      BnnArchitecture arch;
      arch.inputs = all.n_features();
      arch.hidden = cfg.bnn_hidden;
      arch.activation = cfg.activation();
      arch.task = task;
      if (task == BnnTask::classification) {
        const auto max_label = static_cast<std::size_t>(all.targets.maxCoeff());
        if (max_label >= cfg.bnn_classes) {
          throw ConfigError("dataset has label " + std::to_string(max_label) + " but bnn_classes = " +
                            std::to_string(cfg.bnn_classes));
        }
        arch.outputs = cfg.bnn_classes;
      }
      BnnPrior prior;
      prior.weight_var = cfg.bnn_weight_prior_var;
      auto m = std::make_shared<BnnModel>(arch, st.apply(split.train, task), prior, st.target_mean,
                                          st.target_scale);
      Dataset test = st.apply(split.test, task);
      test.targets = split.test.targets;
      p.test = std::move(test);
      p.bnn = m;
      p.model = m;
      break;
    }
  }
  return p;
}

StreamPlan build_stream_plan(const ExperimentConfig& cfg, std::size_t n_data) {
  if (cfg.fitds) {
    return StreamPlan(cfg.stream, fitds_plan(n_data, cfg.rounds, cfg.schedules.batch), n_data,
                      cfg.likelihood_population, n_data);
  }
  std::vector<std::size_t> batches(cfg.rounds);
  for (std::size_t t = 1; t <= cfg.rounds; ++t) batches[t - 1] = batch_size(t, n_data, cfg.schedules.batch);
  return StreamPlan(cfg.stream, std::move(batches), n_data, cfg.likelihood_population);
}

MixtureGrid build_grid(const ExperimentConfig& cfg, const MixtureModel& model) {
  return mixture_posterior_grid(model, cfg.grid_resolution, cfg.grid_window, cfg.reference_size,
                                RngStream(cfg.data_seed));
}

std::filesystem::path create_run_dir(const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "run-%Y%m%d-%H%M%S", &tm);
  for (int k = 0; k < 10000; ++k) {
    const auto dir = root / (k == 0 ? std::string(stamp) : std::string(stamp) + "-" + std::to_string(k));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw ConfigError("could not create a fresh run directory under " + root.string());
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Population mean of the cost gradients -grad log p(d_k | w) over the batch's population.
Vector population_cost_grad(const TargetModel& model, const Vector& w, std::size_t population) {
  if (population == model.n_data()) return -model.full_grad_log_lik(w) / static_cast<double>(population);
  std::vector<std::size_t> idx(population);
  for (std::size_t k = 0; k < population; ++k) idx[k] = k;
  Vector acc = Vector::Zero(w.size());
  model.accumulate_grad_log_lik(w, idx, acc);
  return -acc / static_cast<double>(population);
}

void require_finite(double v, std::size_t t, const char* what) {
  if (!std::isfinite(v)) throw NumericError("round " + std::to_string(t) + ": " + what + " is non-finite");
}

std::string round_prefixed(const std::string& msg, std::size_t t) {
  if (msg.rfind("round ", 0) == 0) return msg;
  return "round " + std::to_string(t) + ": " + msg;
}

struct Summary {
  std::ostringstream o;
  void kv(const std::string& k, const std::string& v) { o << k << ": " << v << '\n'; }
  void num(const std::string& k, double v) { kv(k, format_double(v)); }
};

std::string build_summary(const ExperimentConfig& cfg, const RunResult& r, const std::string& status) {
  Summary s;
  s.kv("status", status);
  s.kv("model", to_string(cfg.model));
  s.kv("sampler", to_string(cfg.sampler));
  s.kv("seed", std::to_string(cfg.seed));
  s.kv("rounds_completed", std::to_string(r.trace.size()));
  s.kv("rounds_planned", std::to_string(cfg.rounds));
  s.kv("batch_schedule", describe(cfg.schedules.batch));
  s.kv("fitds", cfg.fitds ? "true" : "false");
  s.kv("audit", std::string(r.audit.pass ? "pass" : "fail") + " (" + r.audit.detail + ")");
  s.kv("samples_total", std::to_string(r.audit.total));
  if (!r.trace.empty()) {
    const RoundTrace& last = r.trace.back();
    if (last.grad_error) s.num("final_grad_error", *last.grad_error);
    if (last.objective) s.num("final_objective", *last.objective);
    if (last.regret_cum) s.num("final_regret", *last.regret_cum);
    if (last.energy_dist) s.num("final_energy_dist", *last.energy_dist);
    if (last.rmse) s.num("final_rmse", *last.rmse);
    if (last.test_ll) s.num("final_test_ll", *last.test_ll);
  }
  if (r.predictive && r.predictive->accuracy) s.num("final_accuracy", *r.predictive->accuracy);
  if (!r.error_budget.empty()) s.num("error_budget_total", r.error_budget.back());
  if (r.error_budget_exponent) s.num("error_budget_exponent", *r.error_budget_exponent);
  if (r.regret_exponent) s.num("regret_exponent", *r.regret_exponent);
  if (r.path_variation) s.num("path_variation", *r.path_variation);
  if (r.fpc) {
    s.num("fpc_predicted", r.fpc->predicted);
    s.num("fpc_empirical", r.fpc->empirical);
    s.num("fpc_rel_err", r.fpc->rel_err);
  }
  s.num("wallclock_ms_total", r.wallclock_ms);
  return s.o.str();
}

std::optional<double> safe_exponent(const std::vector<double>& series) {
  if (series.size() < 4) return std::nullopt;
  for (std::size_t i = series.size() / 2; i < series.size(); ++i) {
    if (!(series[i] > 0.0)) return std::nullopt;
  }
  return sublinearity_exponent(series);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto started = Clock::now();

  Problem owned;
  const Problem* problem = options.problem;
  if (problem == nullptr) {
    owned = build_problem(cfg);
    problem = &owned;
  }
  const TargetModel& model = *problem->model;
  const std::size_t n_data = model.n_data();
  cfg.schedules.validate(n_data);
  const StreamPlan plan = build_stream_plan(cfg, n_data);
  const SamplerConfig scfg = cfg.sampler_config();
  const RngStream rng(cfg.seed);
  if (const auto* pt = std::get_if<PointMassInit>(&cfg.init); pt && pt->point.size() != static_cast<Eigen::Index>(model.dim())) {
    throw ConfigError("init_point has " + std::to_string(pt->point.size()) + " coordinates, model has " +
                      std::to_string(model.dim()));
  }

  std::optional<MixtureGrid> owned_grid;
  const MixtureGrid* grid = options.grid;
  if (grid == nullptr && (cfg.diag_energy || cfg.svg) && problem->mixture) {
    owned_grid = build_grid(cfg, *problem->mixture);
    grid = &*owned_grid;
  }

  RunResult result;
  if (options.write_artifacts) {
    result.run_dir = create_run_dir(cfg.output_dir);
    write_text_file(result.run_dir / "config.txt", cfg.to_text());
  }

  ParticleEnsemble ensemble = init_ensemble(cfg.n_particles, model.dim(), cfg.init, rng);
  ErrorBudget budget;
  RegretLedger ledger;
  std::vector<Minibatch> emitted;
  emitted.reserve(plan.rounds());

  auto finish = [&](const std::string& status) {
    result.final_particles = ensemble.positions();
    result.audit = stream_audit(plan, emitted);
    result.error_budget = budget.cumulative();
    result.regret = ledger.cumulative();
    if (status == "ok") {
      result.error_budget_exponent = safe_exponent(result.error_budget);
      result.regret_exponent = safe_exponent(result.regret);
    }
    if (cfg.diag_regret) result.path_variation = ledger.variation();
    result.wallclock_ms = ms_since(started);
    result.summary = build_summary(cfg, result, status);
    if (options.write_artifacts) {
      write_trace(result.run_dir / "trace.csv", result.trace);
      write_ensemble(result.run_dir / "ensemble.csv", result.final_particles);
      write_text_file(result.run_dir / "summary.txt", result.summary);
    }
  };

  std::size_t t = 0;
  try {
    for (t = 1; t <= plan.rounds(); ++t) {
      const auto round_start = Clock::now();
      std::optional<Minibatch> mb = next_batch(plan, t, rng);
      if (!mb) break;
      RoundTrace row;
      row.t = t;
      row.batch_size = mb->indices.size();
      row.eta = prior_weight(t, cfg.schedules.prior_weight);
      row.alpha = step_size(t, cfg.schedules.step);
      const bool report = t % cfg.metrics_every == 0 || t == plan.rounds() || t == 1;

      const Vector centre = ensemble_mean(ensemble);
      if (cfg.diag_grad_error) {
        const double e = gradient_error(model, centre, mb->indices, population_cost_grad(model, centre, mb->population));
        require_finite(e, t, "gradient error");
        budget.record(e);
        row.grad_error = e;
      }
      if (cfg.diag_objective && report) {
        const double obj = -(model.full_log_lik(centre) + model.log_prior(centre));
        require_finite(obj, t, "objective");
        row.objective = obj;
      }
      if (cfg.diag_regret) {
        dynamic_regret_update(ledger, *problem->linreg, centre, t, row.eta);
        require_finite(ledger.regret(), t, "regret");
        row.regret_cum = ledger.regret();
      }

      switch (cfg.sampler) {
        case SamplerKind::opvi:
          ensemble = opvi_step(ensemble, model, *mb, t, cfg.schedules, scfg, cfg.kernel);
          break;
        case SamplerKind::svgd:
          ensemble = svgd_step(ensemble, model, *mb, scfg, cfg.kernel, row.alpha);
          break;
        case SamplerKind::sgld:
          ensemble = sgld_ensemble_step(ensemble, model, *mb, t, cfg.schedules, scfg, rng);
          break;
        case SamplerKind::online_map: {
          ParticleMatrix next(ensemble.positions().rows(), ensemble.positions().cols());
          for (std::size_t i = 0; i < ensemble.size(); ++i) {
            const MapState s = online_map_step({ensemble.particle(i), t - 1}, model, *mb, t, cfg.schedules, scfg);
            next.row(static_cast<Eigen::Index>(i)) = s.w.transpose();
          }
          ensemble = ensemble.advanced(std::move(next));
          break;
        }
      }

      if (cfg.diag_energy && report) {
        const double ed = energy_distance(ensemble.positions(), grid->reference);
        require_finite(ed, t, "energy distance");
        row.energy_dist = ed;
      }
      if (cfg.diag_predictive && report) {
        const PredictiveMetrics pm = predictive_metrics(ensemble, *problem->bnn, *problem->test);
        require_finite(pm.rmse, t, "test RMSE");
        require_finite(pm.test_ll, t, "test log-likelihood");
        row.rmse = pm.rmse;
        row.test_ll = pm.test_ll;
        result.predictive = pm;
      }
      if (cfg.record_wallclock) row.wallclock_ms = ms_since(round_start);
      emitted.push_back(std::move(*mb));
      result.trace.push_back(row);
    }
    if (cfg.diag_fpc) {
      const std::size_t b = std::min(cfg.fpc_batch, n_data);
      result.fpc = validate_fpc_variance(model, ensemble_mean(ensemble), n_data, b, cfg.fpc_draws, rng);
    }
  } catch (const NumericError& e) {
    finish("numeric abort at round " + std::to_string(t));
    throw NumericError(round_prefixed(e.what(), t));
  }

  finish("ok");
  if (options.write_artifacts && cfg.svg) {
    write_text_file(result.run_dir / "posterior.svg", scatter_svg(result.final_particles, cfg.grid_window, grid));
  }
  return result;
}

}  // namespace opvi
