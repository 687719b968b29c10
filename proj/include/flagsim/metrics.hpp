#pragma once

#include "flagsim/hydrodynamics.hpp"
#include "flagsim/rod_model.hpp"

#include <optional>
#include <vector>

namespace flagsim {

/// Scales for the dimensionless quantities. `length` defaults to the helix
/// axial length l.
struct Normalization {
  double length = 0.0;
  double bend_stiffness = 0.0;
  double viscosity = 0.0;

  static Normalization from(const PhysicalParams& params, double length_override = 0.0);

  double omega(double omega) const;       // omega * mu l^4 / EI
  double omega_inverse(double omega_bar) const;
  double position(double x) const;        // x / l
  double force(double f) const;           // F l^2 / EI
  /// Time for one motor revolution at `omega` is one unit.
  static double time(double t, double omega);
};

/// Pitch over helix radius.
double normalized_pitch(double pitch, double helix_radius);

/// Thrust transmitted to the head: minus the x component of the fluid force on it.
double propulsive_force(const HeadDrag& drag);

/// F_p r_h / |T_h|; empty when the head torque vanishes.
std::optional<double> efficiency(double propulsive_force, double head_torque, double head_radius);

/// |x_tip - x_h| for one flagellum (0 or 1), or the mean over all flagella
/// when `flagellum` is negative.
double apparent_length(const RobotTopology& topology, const DofVector& dofs, int flagellum = -1);

/// One row of a trajectory file.
struct TrajectorySample {
  double t = 0.0;
  Vec3 head = Vec3::Zero();
  double omega_h = 0.0;
  double fp_x = 0.0;
  double lprime = 0.0;
  int contacts = 0;
  std::optional<double> eta;
};

using Trajectory = std::vector<TrajectorySample>;

/// Steady-state means over the final `fraction` of a run.
struct SteadyState {
  double window_start = 0.0;
  double window_end = 0.0;
  int samples = 0;
  double omega_h = 0.0;
  double velocity_x = 0.0;   // head x displacement over the window / duration
  double speed = 0.0;        // head displacement magnitude / duration
  double fp_x = 0.0;
  double lprime_ratio = 0.0; // mean L' over the first sample's L'
  double contacts = 0.0;
  double contact_fraction = 0.0;  // share of samples with at least one contact
  std::optional<double> eta;      // mean over defined samples
  double path_length = 0.0;       // head path over the whole run
};

/// Throws InvalidInput when the trajectory has fewer than two samples or the
/// fraction is outside (0, 1].
SteadyState steady_state(const Trajectory& trajectory, double fraction);

/// Mean head spin between t0 and t1 from the interval-averaged samples
/// (equivalently the unwrapped head angle difference over the window).
/// Throws InvalidInput if the window is shorter than 10 s and covers less than
/// one head revolution.
double head_angular_velocity(const Trajectory& trajectory, double t0, double t1);

/// Length of the polyline through the head centroids.
double head_path_length(const Trajectory& trajectory);

} // namespace flagsim
