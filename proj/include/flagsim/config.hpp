#pragma once

#include "flagsim/rod_model.hpp"
#include "flagsim/stepper.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flagsim {

/// Config problem tied to a key and (when parsed from text) a 1-based line.
class ConfigError : public InvalidInput {
public:
  ConfigError(std::string key, int line, const std::string& what);
  const std::string& key() const { return key_; }
  int line() const { return line_; }

private:
  std::string key_;
  int line_;
};

struct RunConfig {
  PhysicalParams params;
  int flagella_count = 2;
  /// One value per flagellum; empty means params.pitch for all.
  std::vector<double> pitches;
  Handedness handedness = Handedness::Left;
  double motor_omega = 2.0 * 3.14159265358979323846;  // rad/s (60 rpm)
  double ramp_time = 30.0;
  std::array<double, 2> motor_direction{1.0, 1.0};
  double total_time = 90.0;
  double output_interval = 0.1;
  double steady_fraction = 1.0 / 3.0;
  double normalization_length = 0.0;  // <= 0: helix axial length
  SolverOptions solver;
  std::string output_dir = "out";
  std::string label = "run";

  std::vector<double> resolved_pitches() const;
  ActuationSchedule schedule() const;
  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

/// Flat `key = value` text; `#` starts a comment. Unknown keys, malformed
/// values and violated bounds throw ConfigError with the key and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value, one per line, in a form that
/// parse_config reads back to an identical RunConfig.
std::string format_config(const RunConfig& config);

/// Sets one key from its textual value, as if it appeared in a config file.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value,
                      int line = 0);

/// Canonical key names in output order.
std::vector<std::string> config_keys();

} // namespace flagsim
