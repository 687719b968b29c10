#pragma once

#include "flagsim/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace flagsim {

/// Geometry, material, fluid and discretization parameters. SI units throughout.
/// Defaults reproduce the reference robot (VPS flagella in glycerin).
struct PhysicalParams {
  double helix_radius = 0.0064;
  double pitch = 0.0572;
  double axial_length = 0.0954;
  double head_radius = 0.031;
  double head_height = 0.082;
  double rod_radius = 0.0016;
  double youngs_modulus = 1.255e6;
  double poisson_ratio = 0.5;
  double density = 1260.0;
  double fluid_density = 1260.0;
  double viscosity = 1.0;
  double time_step = 1.0e-4;
  double regularization = 1.67e-4;
  double edge_length = 5.0e-3;
  double drag_translational = 4.8;
  double drag_rotational = 0.36;
  /// Lateral distance between the two flagellum bases.
  double base_separation = 0.031;
  /// Multiplier on EA, EI, GJ for head and motor edges.
  double head_stiffness_factor = 1.0e3;

  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
  double cross_section_area() const;
  double stretch_stiffness() const;  // EA
  double bend_stiffness() const;     // EI
  double twist_stiffness() const;    // GJ
  double head_volume() const;
  double head_mass() const { return fluid_density * head_volume(); }

  /// Throws InvalidInput naming the first offending field.
  void validate() const;
};

enum class Handedness { Left, Right };

enum class NodeRole { FlagellumA, Motor1, Head, Motor2, FlagellumB };
enum class EdgeRole { Flagellum, Motor, Head };

/// Axial: head nodes run along the swimming axis (single flagellum).
/// Lateral: head nodes span the rear face between the two motor plates.
enum class HeadLayout { Axial, Lateral };

/// Stress-free reference quantities. Curvature and twist are per node and
/// zero at the two chain ends.
struct RestShape {
  std::vector<double> edge_length;
  std::vector<double> voronoi_length;
  std::vector<Eigen::Vector2d> curvature;
  std::vector<double> twist;
};

/// A single open chain: flagellum A (tip to base), motor node m1, head nodes
/// h-1, h, h+1, motor node m2, flagellum B (base to tip). The second motor and
/// flagellum are absent for a single-flagellum robot.
struct RobotTopology {
  int node_count = 0;
  int flagella_count = 0;
  HeadLayout head_layout = HeadLayout::Axial;

  std::vector<NodeRole> node_roles;
  std::vector<EdgeRole> edge_roles;
  /// Flagellum id (0 = A, 1 = B) of each flagellum edge, -1 otherwise.
  std::vector<int> edge_flagellum;

  std::array<int, 3> head_nodes{-1, -1, -1};
  std::array<int, 2> motor_nodes{-1, -1};
  std::array<int, 2> tip_nodes{-1, -1};

  std::vector<double> stretch_stiffness;  // per edge
  std::vector<double> bend_stiffness;     // per node
  std::vector<double> twist_stiffness;    // per node

  RestShape rest;

  int edge_count() const { return node_count - 1; }
  Eigen::Index dof_count() const { return DofVector::size_for(node_count); }
  int head_center() const { return head_nodes[1]; }
  /// Nodes belonging to at least one flagellum edge, ascending.
  std::vector<int> flagellum_nodes() const;
  /// Edges with a flagellum role, ascending.
  std::vector<int> flagellum_edges() const;
};

struct Robot {
  RobotTopology topology;
  DofVector dofs;
};

/// Contour length of a helix of the given radius, pitch and axial length.
double helix_contour_length(double radius, double pitch, double axial_length);

/// Samples a helix whose axis is +x, starting at (0, r, 0). Nodes are equally
/// spaced in arc length using ceil(Lc / spacing) edges, so every chord is equal.
std::vector<Vec3> build_helix(double radius, double pitch, double axial_length,
                              Handedness handedness, double spacing);

/// Builds the robot chain in its stress-free configuration. All twist angles
/// are zero and the rest shape equals the initial shape.
Robot assemble_robot(const PhysicalParams& params, std::span<const double> pitches,
                     int flagella_count, Handedness handedness = Handedness::Left);

/// Plain rod with uniform material: every edge has the flagellum role and the
/// given positions define the stress-free state.
Robot assemble_rod(std::span<const Vec3> nodes, const PhysicalParams& params);

/// Recomputes rest curvature and twist so that `dofs` is stress free.
void capture_rest_shape(RobotTopology& topology, const DofVector& dofs);

/// Lumped mass per DOF (4N-1). Position DOFs carry node mass, twist DOFs
/// carry the edge's polar moment of inertia.
VecX lumped_masses(const RobotTopology& topology, const PhysicalParams& params);

const char* to_string(NodeRole role);
const char* to_string(EdgeRole role);

} // namespace flagsim
