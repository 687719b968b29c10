#pragma once

#include "flagsim/rod_model.hpp"

#include <array>
#include <vector>

namespace flagsim {

/// Velocity-from-force map for the flagellar nodes: u = A f with both vectors
/// stacked per node in `nodes` order.
struct MobilityMatrix {
  std::vector<int> nodes;
  MatX matrix;
};

/// Lumped hydrodynamic load on the head.
struct HeadDrag {
  Vec3 force = Vec3::Zero();
  double torque = 0.0;  // about the robot axis
};

/// Head kinematics inferred from the DOF velocities.
struct HeadMotion {
  Vec3 centroid = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
  double spin = 0.0;  // angular velocity about `axis`
};

/// Regularized Stokeslet S(r) = I (|r|^2 + 2 eps^2) / R^3 + r r^T / R^3,
/// R = sqrt(|r|^2 + eps^2); velocity is S f / (8 pi mu).
Mat3 regularized_stokeslet(const Vec3& r, double eps);

/// Integral of the regularized Stokeslet over the straight segment [a, b]
/// evaluated at `x` (units of length^0 times the kernel); the velocity
/// from a uniform force density g is kernel * g / (8 pi mu).
Mat3 rss_segment_kernel(const Vec3& x, const Vec3& a, const Vec3& b, double eps);

/// Same integral split by the linear weights (1 - s/L, s/L): the velocity
/// from a density varying linearly from g_a at a to g_b at b is
/// (K_a g_a + K_b g_b) / (8 pi mu).
std::array<Mat3, 2> rss_segment_kernels(const Vec3& x, const Vec3& a, const Vec3& b, double eps);

Vec3 rss_segment_velocity(const Vec3& eval_point, const Vec3& a, const Vec3& b,
                          const Vec3& force_density, double eps, double mu);

/// Nodal forces are converted to nodal densities (force over the node's share
/// of the adjacent segment lengths), interpolated linearly along each segment,
/// and velocities are collocated at the nodes; the result is symmetrized.
MobilityMatrix assemble_mobility(const RobotTopology& topology, const DofVector& dofs, double eps,
                                 double mu);

/// Hydrodynamic force on the flagellar nodes for DOF velocities `velocities`
/// (4N-1 layout). Returns a 4N-1 vector; non-flagellar and twist entries are 0.
/// Throws SolverFailure if the mobility is not positive definite.
VecX drag_forces(const MobilityMatrix& mobility, const VecX& velocities);

HeadDrag head_drag(const Vec3& head_velocity, double head_spin, const PhysicalParams& params);

HeadMotion head_motion(const RobotTopology& topology, const DofVector& dofs,
                       const VecX& velocities);

/// Adds the head load to a 4N-1 external force vector: the force is split in
/// thirds over the head nodes; the torque goes to the head-edge twist DOFs
/// (axial head) or to a force couple on the outer head nodes (lateral head).
void apply_head_drag(const RobotTopology& topology, const DofVector& dofs, const HeadMotion& motion,
                     const HeadDrag& drag, VecX& external_force);

} // namespace flagsim
