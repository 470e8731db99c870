#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opvi/harness/compare.hpp"
#include "opvi/harness/config.hpp"
#include "opvi/harness/experiment.hpp"
#include "opvi/harness/svg.hpp"
#include "opvi/harness/trace_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

opvi::ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed,
                            const std::optional<std::string>& out_dir) {
  opvi::ExperimentConfig cfg = opvi::load_config(path);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.output_dir = *out_dir;
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out_dir) {
  const auto cfg = load(path, seed, out_dir);
  const auto result = opvi::run_experiment(cfg);
  std::cout << "run directory: " << result.run_dir.string() << '\n' << result.summary;
  return 0;
}

int cmd_validate_fpc(const std::string& path, const std::optional<std::uint64_t>& seed,
                     std::optional<std::size_t> batch, std::optional<std::size_t> draws) {
  const auto cfg = load(path, seed, std::nullopt);
  const opvi::Problem problem = opvi::build_problem(cfg);
  const opvi::RngStream rng(cfg.seed);
  const auto e = opvi::init_ensemble(cfg.n_particles, problem.model->dim(), cfg.init, rng);
  const std::size_t n = problem.model->n_data();
  const std::size_t b = batch.value_or(cfg.fpc_batch);
  const auto v = opvi::validate_fpc_variance(*problem.model, opvi::ensemble_mean(e), n, b,
                                              draws.value_or(cfg.fpc_draws), rng);
  std::cout << "N: " << n << "\nB: " << b << "\npredicted: " << opvi::format_double(v.predicted)
            << "\nempirical: " << opvi::format_double(v.empirical)
            << "\nrel_err: " << opvi::format_double(v.rel_err) << '\n';
  return 0;
}

int cmd_plot(const std::string& input, std::optional<std::string> output,
             const std::optional<std::string>& config) {
  const std::string text = opvi::read_text_file(input);
  std::string svg;
  if (text.rfind(std::string(opvi::kTraceHeader), 0) == 0) {
    svg = opvi::trace_svg(opvi::parse_trace(text));
  } else {
    const opvi::ParticleMatrix x = opvi::read_ensemble(input);
    opvi::GridWindow window;
    std::optional<opvi::MixtureGrid> grid;
    if (config) {
      const auto cfg = load(*config, std::nullopt, std::nullopt);
      window = cfg.grid_window;
      if (cfg.model == opvi::ModelKind::mixture) {
        const auto problem = opvi::build_problem(cfg);
        grid = opvi::build_grid(cfg, *problem.mixture);
      }
    }
    svg = opvi::scatter_svg(x, window, grid ? &*grid : nullptr);
  }
  const std::string out = output.value_or(input + ".svg");
  opvi::write_text_file(out, svg);
  std::cout << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online particle-based variational inference experiments"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", run_config, "Config file")->required();
  run->add_option("--seed", seed, "Override the sampler seed");
  run->add_option("--output-dir", out_dir, "Override output_dir");

  std::vector<std::string> traces;
  auto* compare = app.add_subcommand("compare", "Mean and sd of final metrics across runs");
  compare->add_option("traces", traces, "trace.csv files or run directories")->required();

  std::string fpc_config;
  std::optional<std::size_t> fpc_batch, fpc_draws;
  auto* fpc = app.add_subcommand("validate-fpc", "Check minibatch gradient variance against the FPC law");
  fpc->add_option("config", fpc_config, "Config file")->required();
  fpc->add_option("--seed", seed, "Override the sampler seed");
  fpc->add_option("--batch", fpc_batch, "Batch size B");
  fpc->add_option("--draws", fpc_draws, "Number of batch draws");

  std::string plot_input;
  std::optional<std::string> plot_output, plot_config;
  auto* plot = app.add_subcommand("plot", "SVG from a trace.csv or ensemble.csv");
  plot->add_option("input", plot_input, "trace.csv or ensemble.csv")->required();
  plot->add_option("-o,--output", plot_output, "Output SVG path");
  plot->add_option("--config", plot_config, "Config for the axis window and posterior contours");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_config, seed, out_dir);
    if (*compare) {
      std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
      std::cout << opvi::compare_runs(paths).table();
      return 0;
    }
    if (*fpc) return cmd_validate_fpc(fpc_config, seed, fpc_batch, fpc_draws);
    if (*plot) return cmd_plot(plot_input, plot_output, plot_config);
  } catch (const opvi::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const opvi::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
