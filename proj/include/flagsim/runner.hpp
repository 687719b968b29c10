#pragma once

#include "flagsim/config.hpp"
#include "flagsim/metrics.hpp"
#include "flagsim/stepper.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace flagsim {

const char* software_version();

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string trajectory_header();
std::string format_trajectory_row(const StepRecord& record);
Trajectory parse_trajectory(std::string_view csv);
Trajectory read_trajectory(const std::filesystem::path& path);

/// Builds the robot and simulation described by `config`.
Simulation make_simulation(const RunConfig& config);

struct RunOutcome {
  bool ok = false;
  std::string message;
  std::filesystem::path directory;
  long long steps = 0;
};

/// Runs `config` and writes trajectory.csv and run_meta.cfg into `directory`.
/// On a solver failure the partial trajectory and failure_state.csv are
/// written before SolverFailure is rethrown. `log` receives progress lines.
RunOutcome run_simulation(const RunConfig& config, const std::filesystem::path& directory,
                          std::ostream* log = nullptr);

/// Status recorded in a run_meta.cfg ("ok" or "failed: ...").
std::string read_run_status(const std::filesystem::path& run_meta);

enum class SweepAxis { Rpm, Pitch, FlagellaCount };
SweepAxis parse_sweep_axis(std::string_view name);
const char* to_string(SweepAxis axis);
std::vector<double> parse_value_list(std::string_view text);

/// Config for one sweep point. Pitch values are pitch / helix radius.
RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis, double value);

struct SweepPoint {
  double value = 0.0;
  std::filesystem::path directory;
};

/// Runs every point (failures are recorded, the sweep continues), then writes
/// aggregate.csv into `out_dir`.
std::vector<RunOutcome> run_sweep(const RunConfig& base, SweepAxis axis,
                                  const std::vector<double>& values,
                                  const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// Aggregate table built only from each point's trajectory.csv and run_meta.cfg.
std::string aggregate_sweep(SweepAxis axis, const std::vector<SweepPoint>& points);

/// One-row metrics table for a trajectory; `config` supplies normalization.
std::string metrics_table(const Trajectory& trajectory, const RunConfig& config);

} // namespace flagsim
