// Acceptance checks. Prints one PASS/FAIL line per criterion; each check must
// meet both its numeric tolerance and its wall-clock limit. Criterion ids given
// on the command line restrict the run to those checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "opvi/harness/config.hpp"
#include "opvi/harness/experiment.hpp"
#include "opvi/harness/trace_io.hpp"
#include "opvi/metrics.hpp"
#include "opvi/models.hpp"
#include "opvi/parallel.hpp"
#include "opvi/samplers.hpp"
#include "opvi/schedules.hpp"
#include "opvi/stream.hpp"
#include "oracles.hpp"
#include "toy_models.hpp"

namespace fs = std::filesystem;
using namespace opvi;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g4(double v) { return fmt("%.4g", v); }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------

Verdict fpc_variance_law() {
  const MixtureModel big(mixture_generate(1000, 0.0, 1.0, 1));
  const Vector w = (Vector(2) << 0.0, 1.0).finished();
  const auto mc = validate_fpc_variance(big, w, 1000, 10, 20000, RngStream(1));

  // Exhaustive: every 3-subset of the first 8 data, against the closed form.
  const MixtureModel small(mixture_generate(8, 0.0, 1.0, 2));
  const Vector ws = (Vector(2) << 0.3, 0.7).finished();
  std::vector<Vector> g;
  Vector mean = Vector::Zero(2);
  for (std::size_t k = 0; k < 8; ++k) {
    g.push_back(-small.grad_log_lik(ws, k));
    mean += g.back();
  }
  mean /= 8.0;
  double ss = 0.0;
  for (const auto& gi : g) ss += (gi - mean).squaredNorm();
  const double s2 = ss / 7.0;
  double total = 0.0;
  const auto subsets = oracle::all_subsets(8, 3);
  for (const auto& s : subsets) {
    Vector bm = Vector::Zero(2);
    for (auto k : s) bm += g[k];
    total += (bm / 3.0 - mean).squaredNorm();
  }
  const double exhaustive = total / static_cast<double>(subsets.size());
  const double predicted = (8.0 - 3.0) / (8.0 * 3.0) * s2;
  const double lib = fpc_predicted_variance(8, 3, gradient_population(small, ws, 8).variance);
  const double ex_err = std::max(std::abs(exhaustive - predicted), std::abs(lib - predicted));

  return {mc.rel_err < 0.05 && ex_err <= 1e-10,
          "N=1000 B=10 rel_err " + g4(mc.rel_err) + " (< 0.05); N=8 B=3 exhaustive |diff| " + g4(ex_err) +
              " (<= 1e-10)"};
}

// ---------------------------------------------------------------------------

ExperimentConfig linreg_base() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::linreg;
  cfg.n_data = 10000;
  cfg.linreg_dim = 5;
  cfg.sampler = SamplerKind::online_map;
  cfg.n_particles = 1;
  cfg.fitds = false;
  cfg.schedules.step = ConstantStep{5e-6};
  return cfg;
}

Verdict error_budget_growth() {
  ExperimentConfig cfg = linreg_base();
  cfg.rounds = 5000;
  cfg.diag_grad_error = true;
  cfg.seed = 1;
  const Problem problem = build_problem(cfg);

  cfg.schedules.batch = PowerBatch{0.55};
  const auto power = run_experiment(cfg, {.write_artifacts = false, .problem = &problem});
  cfg.schedules.batch = StaticBatch{20};
  const auto fixed = run_experiment(cfg, {.write_artifacts = false, .problem = &problem});

  const double ep = sublinearity_exponent(power.error_budget);
  const double es = sublinearity_exponent(fixed.error_budget);
  return {ep <= 0.80 && es >= 0.95,
          "power rho=0.55 exponent " + g4(ep) + " (<= 0.80), static B=20 exponent " + g4(es) + " (>= 0.95)"};
}

// ---------------------------------------------------------------------------

Verdict online_map_regret() {
  ExperimentConfig cfg = linreg_base();
  cfg.rounds = 2000;
  cfg.diag_regret = true;
  cfg.schedules.batch = PowerBatch{0.55};
  const Problem problem = build_problem(cfg);

  std::vector<double> avg(cfg.rounds, 0.0);
  std::vector<double> exps;
  const int seeds = 10;
  for (int s = 1; s <= seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto r = run_experiment(cfg, {.write_artifacts = false, .problem = &problem});
    for (std::size_t t = 0; t < cfg.rounds; ++t) avg[t] += r.regret[t] / seeds;
    exps.push_back(sublinearity_exponent(r.regret));
  }
  const double e = sublinearity_exponent(avg);
  const double ratio = (avg[1999] / 2000.0) / (avg[199] / 200.0);
  return {e < 0.9 && ratio < 0.25,
          "exponent of seed-averaged R(T) " + g4(e) + " (< 0.9; per-seed mean " + g4(mean_of(exps)) +
              "), [R(2000)/2000]/[R(200)/200] " + g4(ratio) + " (< 0.25)"};
}

// ---------------------------------------------------------------------------

double lockstep_max_diff(const TargetModel& model, std::size_t rounds, const Vector& start) {
  SchedulePack sched;
  sched.batch = PowerBatch{0.55};
  sched.step = ConstantStep{1e-4};
  const StreamPlan plan(StreamMode::shuffled, fitds_plan(model.n_data(), rounds, sched.batch), model.n_data());
  SamplerConfig opvi_cfg = SamplerConfig::defaults_for(SamplerKind::opvi);
  opvi_cfg.diffusion_scale = 0.0;
  const SamplerConfig map_cfg = SamplerConfig::defaults_for(SamplerKind::online_map);
  const RngStream rng(7);
  ParticleEnsemble e(ParticleMatrix(start.transpose()));
  MapState m{start, 0};
  double worst = 0.0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto mb = *next_batch(plan, t, rng);
    e = opvi_step(e, model, mb, t, sched, opvi_cfg, KernelSpec{});
    m = online_map_step(m, model, mb, t, sched, map_cfg);
    worst = std::max(worst, (e.particle(0) - m.w).cwiseAbs().maxCoeff());
  }
  return worst;
}

Verdict sampler_equivalence() {
  const MixtureModel mix(mixture_generate(10000, 0.0, 1.0, 1));
  const double dm = lockstep_max_diff(mix, 500, (Vector(2) << 0.5, -0.5).finished());
  const LinRegModel lin = linreg_generate(2000, 5, 3);
  const double dl = lockstep_max_diff(lin, 500, Vector::Constant(5, 0.1));
  return {dm <= 1e-12 && dl <= 1e-12,
          "max coordinate gap over 500 rounds: mixture " + g4(dm) + ", linreg " + g4(dl) + " (<= 1e-12)"};
}

// ---------------------------------------------------------------------------

// Worst relative error of analytic vs central-difference gradients, for the full
// log posterior and for one random datum, per probe.
double gradient_gate(const TargetModel& m, int probes, double scale, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::uniform_int_distribution<std::size_t> pick(0, m.n_data() - 1);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    Vector w(static_cast<Eigen::Index>(m.dim()));
    for (auto& c : w) c = nd(gen);
    const Vector analytic = m.full_grad_log_lik(w) + m.grad_log_prior(w);
    const Vector fd = oracle::central_difference([&](const Vector& v) { return m.full_log_lik(v) + m.log_prior(v); }, w);
    const double scale_full = std::max(fd.norm(), 1e-6);
    worst = std::max(worst, (analytic - fd).norm() / scale_full);
    const std::size_t k = pick(gen);
    const Vector ak = m.grad_log_lik(w, k);
    const Vector fk = oracle::central_difference([&](const Vector& v) { return m.log_lik(v, k); }, w);
    worst = std::max(worst, (ak - fk).norm() / std::max(fk.norm(), 1e-6));
  }
  return worst;
}

Verdict gradient_correctness() {
  const MixtureModel mix(mixture_generate(200, 0.0, 1.0, 1));
  const LinRegModel lin = linreg_generate(200, 5, 2);
  Dataset reg = synthetic_regression(40, 3);
  reg.features = reg.features.leftCols(5).eval();
  const auto sreg = Standardizer::fit(reg, BnnTask::regression);
  const BnnModel bnn_reg({5, 3, 1, Activation::tanh, BnnTask::regression}, sreg.apply(reg, BnnTask::regression));
  const Dataset cls = synthetic_classification(40, 5, 2, 4);
  const BnnModel bnn_cls({5, 3, 2, Activation::sigmoid, BnnTask::classification}, cls);

  const double em = gradient_gate(mix, 100, 1.5, 11);
  const double el = gradient_gate(lin, 100, 1.0, 12);
  const double er = gradient_gate(bnn_reg, 100, 0.7, 13);
  const double ec = gradient_gate(bnn_cls, 100, 0.7, 14);
  const double worst = std::max({em, el, er, ec});
  return {worst < 1e-5, "worst relative error over 100 probes: mixture " + g4(em) + ", linreg " + g4(el) +
                            ", BNN 5-3-1 " + g4(er) + ", BNN 5-3-2 " + g4(ec) + " (< 1e-5)"};
}

// ---------------------------------------------------------------------------

Verdict posterior_tracking() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::mixture;
  cfg.n_data = 10000;
  cfg.n_particles = 100;
  cfg.rounds = 500;
  cfg.diag_energy = true;
  cfg.metrics_every = cfg.rounds;
  cfg.grid_resolution = 400;
  // Step tuned once on seeds 101-103 for increasing-batch OPVI; shared by every sampler.
  cfg.schedules.step = ConstantStep{4e-4};
  const Problem problem = build_problem(cfg);
  const MixtureGrid grid = build_grid(cfg, *problem.mixture);

  auto final_energy = [&](ExperimentConfig c) {
    const auto r = run_experiment(c, {.write_artifacts = false, .problem = &problem, .grid = &grid});
    return *r.trace.back().energy_dist;
  };

  int wins = 0;
  std::vector<double> inc, fixed, svgd;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    ExperimentConfig c = cfg;
    c.seed = s;
    c.fitds = true;
    c.schedules.batch = PowerBatch{0.55};
    inc.push_back(final_energy(c));
    c.schedules.batch = StaticBatch{20};
    fixed.push_back(final_energy(c));
    c.sampler = SamplerKind::svgd;
    c.fitds = false;
    c.schedules.batch = FullBatch{};
    svgd.push_back(final_energy(c));
    if (inc.back() <= fixed.back()) ++wins;
  }
  const double ratio = mean_of(inc) / mean_of(svgd);
  std::string per_seed;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    per_seed += (i ? " " : "") + g4(inc[i]) + "/" + g4(fixed[i]);
  }
  return {wins >= 4 && ratio <= 2.0,
          "increasing <= static in " + std::to_string(wins) + "/5 seeds (>= 4) [" + per_seed +
              "]; mean energy increasing " + g4(mean_of(inc)) + " vs full-batch SVGD " + g4(mean_of(svgd)) +
              ", ratio " + g4(ratio) + " (<= 2)"};
}

// ---------------------------------------------------------------------------

Verdict bnn_ordering() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::bnn_regression;
  cfg.n_data = 10000;
  cfg.test_fraction = 0.1;
  cfg.bnn_hidden = 50;
  cfg.n_particles = 20;
  cfg.rounds = 500;
  cfg.fitds = true;
  cfg.diag_predictive = true;
  cfg.metrics_every = cfg.rounds;
  cfg.init = StandardNormalInit{0.1};

  std::vector<double> rmse_inc, rmse_fixed, ll_opvi, ll_sgld;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    ExperimentConfig c = cfg;
    c.data_seed = s;
    c.seed = s;
    const Problem problem = build_problem(c);
    auto run = [&](const ExperimentConfig& rc) {
      return *run_experiment(rc, {.write_artifacts = false, .problem = &problem}).predictive;
    };
    // Steps were tuned once on seeds 101-103: the ParVI step for increasing-batch
    // OPVI and shared by both OPVI runs, the SGLD step separately by test LL.
    c.sampler = SamplerKind::opvi;
    c.schedules.step = DecayingStep{2.5e-3, 0.55};
    c.schedules.batch = PowerBatch{0.55};
    const auto inc = run(c);
    c.schedules.batch = StaticBatch{20};
    const auto fixed = run(c);
    c.sampler = SamplerKind::sgld;
    c.schedules.step = ConstantStep{3e-5};
    const auto sgld = run(c);
    rmse_inc.push_back(inc.rmse);
    rmse_fixed.push_back(fixed.rmse);
    ll_opvi.push_back(inc.test_ll);
    ll_sgld.push_back(sgld.test_ll);
  }
  const double ri = mean_of(rmse_inc), rf = mean_of(rmse_fixed);
  const double lo = mean_of(ll_opvi), ls = mean_of(ll_sgld);
  int rmse_wins = 0, ll_wins = 0;
  for (std::size_t i = 0; i < rmse_inc.size(); ++i) {
    rmse_wins += rmse_inc[i] <= rmse_fixed[i];
    ll_wins += ll_opvi[i] >= ll_sgld[i];
  }
  return {ri <= rf && lo >= ls, "mean RMSE increasing " + g4(ri) + " <= static " + g4(rf) + " (paired wins " +
                                    std::to_string(rmse_wins) + "/10); mean test LL OPVI " + g4(lo) + " >= SGLD " +
                                    g4(ls) + " (paired wins " + std::to_string(ll_wins) + "/10)"};
}

// ---------------------------------------------------------------------------

Verdict sgld_calibration() {
  const toy::StandardNormalTarget target(1);
  const std::size_t chains = 100, steps = 100000;
  SchedulePack sched;
  sched.step = ConstantStep{0.01};
  const SamplerConfig cfg = SamplerConfig::defaults_for(SamplerKind::sgld);
  const RngStream rng(5);
  ParticleEnsemble e = init_ensemble(chains, 1, StandardNormalInit{}, rng);
  const Minibatch mb{{0}, 1};
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 1; t <= steps; ++t) {
    e = sgld_ensemble_step(e, target, mb, t, sched, cfg, rng);
    const auto col = e.positions().col(0);
    sum += col.sum();
    sum_sq += col.squaredNorm();
  }
  const double n = static_cast<double>(chains * steps);
  const double var = sum_sq / n - (sum / n) * (sum / n);
  return {std::abs(var - 1.0) <= 0.1, "pooled variance " + g4(var) + " over " + std::to_string(chains) + " chains x " +
                                          std::to_string(steps) + " steps, alpha 0.01 (|var - 1| <= 0.1)"};
}

// ---------------------------------------------------------------------------

Verdict schedule_identities() {
  bool ok = true;
  std::string detail = "prior partial sums:";
  for (std::size_t T : {10u, 1000u, 1000000u}) {
    double s = 0.0;
    for (std::size_t t = 1; t <= T; ++t) s += prior_weight(t, InverseSquarePriorWeight{});
    const double lo = 1.0 - 6.0 / (M_PI * M_PI * static_cast<double>(T));
    const bool in = s > lo && s < 1.0;
    ok = ok && in;
    detail += " T=" + std::to_string(T) + " " + fmt("%.12f", s) + (in ? "" : " (outside)");
  }
  int configs = 0, exact = 0;
  const std::vector<BatchSchedule> specs = {PowerBatch{0.55}, PowerBatch{1.0}, StaticBatch{20}, SaturatingBatch{0.55}};
  for (std::size_t n : {500u, 1000u, 10000u, 31337u, 100000u}) {
    for (std::size_t rounds : {10u, 100u, 250u, 500u, 2000u}) {
      if (rounds > n) continue;
      for (const auto& spec : specs) {
        ++configs;
        const auto plan = fitds_plan(n, rounds, spec);
        const std::size_t sum = std::accumulate(plan.begin(), plan.end(), std::size_t{0});
        const bool fine = sum == n && plan.size() == rounds &&
                          std::all_of(plan.begin(), plan.end(), [&](std::size_t b) { return b >= 1 && b <= n; });
        if (fine) ++exact;
      }
    }
  }
  ok = ok && configs >= 50 && exact == configs;
  detail += "; FITDS exact sums " + std::to_string(exact) + "/" + std::to_string(configs) + " configurations";
  return {ok, detail};
}

// ---------------------------------------------------------------------------

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "opvi_acceptance_determinism";
  fs::remove_all(root);
  ExperimentConfig cfg = parse_config(
      "model = mixture\nn_data = 2000\nn_particles = 50\nrounds = 200\nseed = 9\nbatch = power\nfitds = true\n"
      "step_size = 0.001\ndiag_grad_error = true\ndiag_objective = true\ndiag_energy = true\n"
      "grid_resolution = 100\nreference_size = 300\nmetrics_every = 10\n");
  cfg.output_dir = root.string();

  auto trace_with_threads = [&](std::size_t threads) {
    set_thread_count(threads);
    const auto r = run_experiment(cfg);
    set_thread_count(0);
    return read_text_file(r.run_dir / "trace.csv") + read_text_file(r.run_dir / "ensemble.csv");
  };
  const std::string a = trace_with_threads(1);
  const std::string b = trace_with_threads(1);
  const std::string c = trace_with_threads(4);
  cfg.sampler = SamplerKind::sgld;
  cfg.diag_energy = false;
  const std::string d = trace_with_threads(1);
  const std::string e = trace_with_threads(3);
  fs::remove_all(root);
  const bool rerun = a == b;
  const bool threads = a == c && d == e;
  return {rerun && threads, std::string("OPVI rerun ") + (rerun ? "identical" : "differs") + ", OPVI 1 vs 4 threads " +
                                (a == c ? "identical" : "differs") + ", SGLD 1 vs 3 threads " +
                                (d == e ? "identical" : "differs") + " (trace.csv and ensemble.csv bytes)"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "finite-population variance law", 30, fpc_variance_law},
      {2, "error-budget growth", 120, error_budget_growth},
      {3, "online MAP regret", 120, online_map_regret},
      {4, "sampler equivalence", 5, sampler_equivalence},
      {5, "gradient correctness", 10, gradient_correctness},
      {6, "mixture posterior tracking", 180, posterior_tracking},
      {7, "BNN ordering", 600, bnn_ordering},
      {8, "SGLD calibration", 10, sgld_calibration},
      {9, "schedule identities", 5, schedule_identities},
      {10, "determinism", 60, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& ex) {
      v = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %-32s %s | %.1f s (limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                secs, c.limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
