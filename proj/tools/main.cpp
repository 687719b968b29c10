#include "flagsim/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace flagsim;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverFailure = 3;

int simulate(const std::string& config_path, const std::string& out, bool quiet) {
  const RunConfig cfg = load_config(config_path);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
  const RunOutcome r = run_simulation(cfg, dir, quiet ? nullptr : &std::cerr);
  if (!quiet) std::cerr << "wrote " << (dir / "trajectory.csv").string() << " (" << r.steps << " steps)\n";
  return 0;
}

int sweep(const std::string& config_path, const std::string& axis, const std::string& values,
          const std::string& out, bool quiet) {
  const RunConfig cfg = load_config(config_path);
  const SweepAxis ax = parse_sweep_axis(axis);
  const std::vector<double> vals = parse_value_list(values);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
  const auto outcomes = run_sweep(cfg, ax, vals, dir, quiet ? nullptr : &std::cerr);
  int failed = 0;
  for (const auto& o : outcomes) failed += o.ok ? 0 : 1;
  if (!quiet)
    std::cerr << "wrote " << (dir / "aggregate.csv").string() << " (" << outcomes.size() - failed
              << " ok, " << failed << " failed)\n";
  return failed > 0 ? kSolverFailure : 0;
}

int metrics(const std::string& trajectory_path, const std::string& out, bool quiet) {
  const fs::path tp(trajectory_path);
  const Trajectory tr = read_trajectory(tp);
  const fs::path meta = tp.parent_path() / "run_meta.cfg";
  const RunConfig cfg = fs::exists(meta) ? load_config(meta) : RunConfig{};
  const std::string table = metrics_table(tr, cfg);
  const fs::path dir = out.empty() ? tp.parent_path() : fs::path(out);
  write_file_atomic(dir / "metrics.csv", table);
  if (!quiet) std::cout << table;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flagellated soft robot simulator"};
  app.set_version_flag("--version", std::string(software_version()));
  std::string out;
  bool quiet = false;
  app.add_option("--out", out, "Output directory (overrides output_dir)");
  app.add_flag("--quiet", quiet, "Suppress progress output");
  app.require_subcommand(1);

  std::string config_path, axis, values, trajectory_path;
  auto* sim = app.add_subcommand("simulate", "Run one simulation");
  sim->add_option("config", config_path, "Config file")->required();
  sim->fallthrough();

  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep");
  sw->add_option("config", config_path, "Config file")->required();
  sw->add_option("--axis", axis, "rpm, pitch (pitch/helix radius) or flagella_count")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->fallthrough();

  auto* met = app.add_subcommand("metrics", "Steady-state metrics of a trajectory");
  met->add_option("trajectory", trajectory_path, "trajectory.csv")->required();
  met->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*sim) return simulate(config_path, out, quiet);
    if (*sw) return sweep(config_path, axis, values, out, quiet);
    if (*met) return metrics(trajectory_path, out, quiet);
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
