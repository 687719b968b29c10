#pragma once

#include "flagsim/contact.hpp"
#include "flagsim/frames.hpp"
#include "flagsim/hydrodynamics.hpp"
#include "flagsim/rod_model.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace flagsim {

/// NaturalTwist advances the rest twist at the motor nodes. StiffMotor does
/// the same but multiplies the motor-node twist stiffness so the relative
/// rotation is enforced almost kinematically.
enum class ActuationMode { NaturalTwist, StiffMotor };

struct ActuationSchedule {
  double omega_target = 0.0;  // rad/s
  double ramp_time = 30.0;    // s
  std::array<double, 2> direction{1.0, 1.0};

  /// omega_T * min(t / t_ramp, 1).
  double omega(double t) const;
};

struct SolverOptions {
  double newton_tol = 0.0;  // <= 0 selects 1e-6 * EA * dt
  int max_newton_iter = 50;
  int max_halvings = 4;
  int restore_after = 100;
  int max_contact_resolves = 10;
  double contact_stiffness = 0.0;  // <= 0 selects 0.01 * EA / r0
  bool hydrodynamics = true;
  bool contact = true;
  ActuationMode actuation = ActuationMode::NaturalTwist;
  double stiff_motor_factor = 1.0e3;
};

struct SimState {
  double time = 0.0;
  DofVector dofs;
  VecX velocity;
  FrameSet frames;
  VecX masses;
  std::array<double, 2> motor_twist{0.0, 0.0};  // accumulated motor angle, rad
};

/// Everything a single implicit step needs besides the unknown configuration.
/// Contact pairs are evaluated at the trial configuration on every iteration.
struct StepProblem {
  const RobotTopology* topology = nullptr;
  const VecX* masses = nullptr;
  const DofVector* q_old = nullptr;
  const VecX* v_old = nullptr;
  const FrameSet* frames_old = nullptr;
  VecX f_ext;
  double dt = 0.0;
  std::vector<std::array<int, 2>> contacts;
  double contact_stiffness = 0.0;
  double rod_radius = 0.0;
};

struct NewtonResult {
  DofVector dofs;
  FrameSet frames;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;                // 1-norm at exit
  std::vector<double> residual_history; // 1-norm before each update
};

/// Equations of motion residual m/dt^2 (q - q_old - dt v_old) + dE/dq - f_ext - f_contact.
VecX residual(const StepProblem& problem, const DofVector& q_new, const FrameSet& frames_new);

/// Newton iteration from `guess`. Hydrodynamic terms are explicit (no
/// Jacobian); contact terms enter through a low-rank update of the banded
/// Jacobian.
NewtonResult newton_solve(const StepProblem& problem, const DofVector& guess, double tol,
                          int max_iter);

/// Penalty forces of the listed pairs at configuration `dofs` (4N-1 vector).
VecX contact_forces(const DofVector& dofs, const std::vector<std::array<int, 2>>& pairs,
                    double stiffness, double rod_radius);

/// Output-frame snapshot. Rates and loads are averages over the preceding
/// output interval; contact data is at the frame itself except
/// `max_penetration`, which is the largest committed value in the interval.
struct StepRecord {
  double time = 0.0;
  Vec3 head_centroid = Vec3::Zero();
  Vec3 head_axis = Vec3::UnitX();
  double omega_h = 0.0;      // head spin about the robot axis
  double omega_t = 0.0;      // flagellum spin about the robot axis
  double omega_motor = 0.0;  // commanded relative rate
  Vec3 head_force = Vec3::Zero();
  double head_torque = 0.0;
  double propulsive_force = 0.0;  // -x component of the head drag
  double apparent_length = 0.0;
  std::array<Vec3, 2> tips{Vec3::Zero(), Vec3::Zero()};
  int contacts = 0;
  double max_penetration = 0.0;
  double flagella_separation = 0.0;
  std::optional<double> efficiency;
  double dt = 0.0;
  double newton_iterations = 0.0;  // mean per step in the interval
};

class Simulation {
public:
  Simulation(Robot robot, PhysicalParams params, ActuationSchedule schedule,
             SolverOptions options = {});

  const RobotTopology& topology() const { return topology_; }
  const PhysicalParams& params() const { return params_; }
  const SimState& state() const { return state_; }
  double contact_stiffness() const { return contact_stiffness_; }
  double newton_tolerance() const { return tol_; }
  double current_dt() const { return dt_; }
  /// Largest penetration of any committed configuration so far.
  double max_committed_penetration() const { return max_penetration_; }
  const std::vector<ContactPair>& active_contacts() const { return active_; }
  long long steps_taken() const { return steps_; }

  /// Advances one (possibly reduced) time step. Throws SolverFailure when the
  /// step cannot be completed after all halvings.
  void step();

  /// Steps until `t_end`, calling `sink` at every output time (including t = 0
  /// when t_end > 0).
  void run(double t_end, double output_interval, const std::function<void(const StepRecord&)>& sink);

  /// Snapshot at the current time from the running interval averages.
  StepRecord snapshot() const;

private:
  RobotTopology topology_;
  PhysicalParams params_;
  ActuationSchedule schedule_;
  SolverOptions options_;
  SimState state_;
  double tol_ = 0.0;
  double contact_stiffness_ = 0.0;
  double dt_nominal_ = 0.0;
  double dt_ = 0.0;
  int halvings_ = 0;
  int since_halving_ = 0;
  long long ticks_ = 0;  // time in units of dt_nominal / 2^max_halvings
  long long steps_ = 0;
  std::array<double, 2> base_rest_twist_{0.0, 0.0};
  std::vector<ContactPair> active_;
  double max_penetration_ = 0.0;

  struct Accumulator {
    double duration = 0.0;
    double head_angle = 0.0;
    double flagellum_angle = 0.0;
    Vec3 head_force = Vec3::Zero();
    double head_torque = 0.0;
    double max_penetration = 0.0;
    long long steps = 0;
    long long newton_iterations = 0;
  } acc_;
  int last_contacts_ = 0;

  void advance(double dt);
  long long tick_span(int halvings) const;
  double flagellum_spin(const VecX& velocity, const Vec3& axis) const;
  void reset_accumulator();
};

} // namespace flagsim
