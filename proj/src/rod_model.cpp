#include "flagsim/rod_model.hpp"

#include "flagsim/elasticity.hpp"
#include "flagsim/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace flagsim {

namespace {

using std::numbers::pi;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidInput(std::string(name) + " must be strictly positive");
}

struct ChainBuilder {
  std::vector<Vec3> nodes;
  std::vector<NodeRole> node_roles;
  std::vector<EdgeRole> edge_roles;  // role of the edge ending at each appended node
  std::vector<int> edge_flagellum;

  int add(const Vec3& x, NodeRole role, EdgeRole incoming, int flagellum = -1) {
    if (!nodes.empty()) {
      edge_roles.push_back(incoming);
      edge_flagellum.push_back(incoming == EdgeRole::Flagellum ? flagellum : -1);
    }
    nodes.push_back(x);
    node_roles.push_back(role);
    return static_cast<int>(nodes.size()) - 1;
  }
};

// Nodes of one flagellum and its stem, oriented along the chain. `axis_origin`
// is the point where the stem meets the motor node; the flagellum trails in -x.
// Returned order is tip to stem (for A); B is reversed by the caller.
std::vector<Vec3> flagellum_nodes(const PhysicalParams& p, double pitch, Handedness hand,
                                  const Vec3& motor_node, bool mirror) {
  const std::vector<Vec3> helix =
      build_helix(p.helix_radius, pitch, p.axial_length, hand, p.edge_length);
  const double stem_x = motor_node.x() - p.edge_length;
  const double base_x = stem_x - p.edge_length;
  // Helix axial range [0, l] is mapped to [base_x - l, base_x] with the base at
  // the head end. For B the helix is turned 180 degrees about z so that its
  // handedness is preserved while its base still faces the head.
  std::vector<Vec3> out;
  out.reserve(helix.size() + 1);
  for (const Vec3& h : helix) {
    Vec3 local = h;
    if (mirror) local = Vec3(p.axial_length - h.x(), -h.y(), h.z());
    out.emplace_back(base_x - p.axial_length + local.x(), motor_node.y() + local.y(),
                     motor_node.z() + local.z());
  }
  if (mirror) std::reverse(out.begin(), out.end());
  // Mirrored list is now also tip -> base.
  out.emplace_back(stem_x, motor_node.y(), motor_node.z());
  return out;
}

} // namespace

double PhysicalParams::cross_section_area() const { return pi * rod_radius * rod_radius; }
double PhysicalParams::stretch_stiffness() const { return youngs_modulus * cross_section_area(); }
double PhysicalParams::bend_stiffness() const {
  return youngs_modulus * pi * std::pow(rod_radius, 4) / 4.0;
}
double PhysicalParams::twist_stiffness() const {
  return shear_modulus() * pi * std::pow(rod_radius, 4) / 2.0;
}
double PhysicalParams::head_volume() const { return pi * head_radius * head_radius * head_height; }

void PhysicalParams::validate() const {
  require_positive(helix_radius, "helix_radius");
  require_positive(pitch, "pitch");
  require_positive(axial_length, "axial_length");
  require_positive(head_radius, "head_radius");
  require_positive(head_height, "head_height");
  require_positive(rod_radius, "rod_radius");
  require_positive(youngs_modulus, "youngs_modulus");
  require_positive(poisson_ratio, "poisson_ratio");
  if (poisson_ratio > 0.5) throw InvalidInput("poisson_ratio must lie in (0, 0.5]");
  require_positive(density, "density");
  require_positive(fluid_density, "fluid_density");
  require_positive(viscosity, "viscosity");
  require_positive(time_step, "time_step");
  require_positive(regularization, "regularization");
  require_positive(edge_length, "edge_length");
  require_positive(drag_translational, "drag_translational");
  require_positive(drag_rotational, "drag_rotational");
  require_positive(base_separation, "base_separation");
  require_positive(head_stiffness_factor, "head_stiffness_factor");
}

std::vector<int> RobotTopology::flagellum_nodes() const {
  std::vector<int> out;
  for (int k = 0; k < edge_count(); ++k) {
    if (edge_roles[k] != EdgeRole::Flagellum) continue;
    if (out.empty() || out.back() != k) out.push_back(k);
    out.push_back(k + 1);
  }
  return out;
}

std::vector<int> RobotTopology::flagellum_edges() const {
  std::vector<int> out;
  for (int k = 0; k < edge_count(); ++k)
    if (edge_roles[k] == EdgeRole::Flagellum) out.push_back(k);
  return out;
}

double helix_contour_length(double radius, double pitch, double axial_length) {
  const double slope = 2.0 * pi * radius / pitch;
  return axial_length * std::sqrt(1.0 + slope * slope);
}

std::vector<Vec3> build_helix(double radius, double pitch, double axial_length,
                              Handedness handedness, double spacing) {
  if (!(radius >= 0.0)) throw InvalidInput("helix radius must be non-negative");
  require_positive(pitch, "pitch");
  require_positive(axial_length, "axial_length");
  require_positive(spacing, "spacing");
  const double contour = helix_contour_length(radius, pitch, axial_length);
  if (spacing >= contour) throw InvalidInput("spacing must be shorter than the contour length");

  const int edges = static_cast<int>(std::ceil(contour / spacing - 1e-9));
  const double turns = 2.0 * pi * axial_length / pitch;
  const double sign = handedness == Handedness::Right ? 1.0 : -1.0;
  std::vector<Vec3> nodes;
  nodes.reserve(edges + 1);
  for (int i = 0; i <= edges; ++i) {
    const double u = static_cast<double>(i) / edges;
    const double phi = u * turns;
    nodes.emplace_back(u * axial_length, radius * std::cos(phi), sign * radius * std::sin(phi));
  }
  return nodes;
}

Robot assemble_robot(const PhysicalParams& params, std::span<const double> pitches,
                     int flagella_count, Handedness handedness) {
  params.validate();
  if (flagella_count != 1 && flagella_count != 2)
    throw InvalidInput("flagella_count must be 1 or 2");
  if (static_cast<int>(pitches.size()) != flagella_count)
    throw InvalidInput("expected " + std::to_string(flagella_count) + " pitch values, got " +
                       std::to_string(pitches.size()));
  for (double p : pitches) require_positive(p, "pitch");

  const double le = params.edge_length;
  ChainBuilder chain;
  RobotTopology topo;
  topo.flagella_count = flagella_count;

  std::array<Vec3, 3> head;
  std::array<Vec3, 2> motor;
  if (flagella_count == 1) {
    topo.head_layout = HeadLayout::Axial;
    const double h = params.head_height;
    head = {Vec3(0, 0, 0), Vec3(0.5 * h, 0, 0), Vec3(h, 0, 0)};
    motor[0] = Vec3(-le, 0, 0);
  } else {
    topo.head_layout = HeadLayout::Lateral;
    const double b = 0.5 * params.base_separation;
    head = {Vec3(0, -b, 0), Vec3(0, 0, 0), Vec3(0, b, 0)};
    motor[0] = Vec3(-le, -b, 0);
    motor[1] = Vec3(-le, b, 0);
  }

  // Flagellum A: tip -> helix base -> stem node, then motor node m1.
  const std::vector<Vec3> fa = flagellum_nodes(params, pitches[0], handedness, motor[0], false);
  for (std::size_t i = 0; i < fa.size(); ++i)
    chain.add(fa[i], NodeRole::FlagellumA, EdgeRole::Flagellum, 0);
  topo.tip_nodes[0] = 0;
  // The stem edge (stem node -> m1) is part of the motor assembly.
  topo.motor_nodes[0] = chain.add(motor[0], NodeRole::Motor1, EdgeRole::Motor);
  topo.head_nodes[0] = chain.add(head[0], NodeRole::Head, EdgeRole::Motor);
  topo.head_nodes[1] = chain.add(head[1], NodeRole::Head, EdgeRole::Head);
  topo.head_nodes[2] = chain.add(head[2], NodeRole::Head, EdgeRole::Head);

  if (flagella_count == 2) {
    topo.motor_nodes[1] = chain.add(motor[1], NodeRole::Motor2, EdgeRole::Motor);
    std::vector<Vec3> fb = flagellum_nodes(params, pitches[1], handedness, motor[1], true);
    std::reverse(fb.begin(), fb.end());  // stem -> base -> tip
    chain.add(fb[0], NodeRole::FlagellumB, EdgeRole::Motor);
    for (std::size_t i = 1; i < fb.size(); ++i)
      chain.add(fb[i], NodeRole::FlagellumB, EdgeRole::Flagellum, 1);
    topo.tip_nodes[1] = static_cast<int>(chain.nodes.size()) - 1;
  }

  topo.node_count = static_cast<int>(chain.nodes.size());
  topo.node_roles = std::move(chain.node_roles);
  topo.edge_roles = std::move(chain.edge_roles);
  topo.edge_flagellum = std::move(chain.edge_flagellum);

  DofVector dofs(topo.node_count);
  for (int k = 0; k < topo.node_count; ++k) dofs.set_node(k, chain.nodes[k]);

  const int ne = topo.edge_count();
  const double ea = params.stretch_stiffness();
  const double ei = params.bend_stiffness();
  const double gj = params.twist_stiffness();
  std::vector<double> factor(ne, 1.0);
  for (int k = 0; k < ne; ++k)
    if (topo.edge_roles[k] != EdgeRole::Flagellum) factor[k] = params.head_stiffness_factor;
  topo.stretch_stiffness.resize(ne);
  for (int k = 0; k < ne; ++k) topo.stretch_stiffness[k] = ea * factor[k];
  topo.bend_stiffness.assign(topo.node_count, 0.0);
  topo.twist_stiffness.assign(topo.node_count, 0.0);
  for (int k = 1; k + 1 < topo.node_count; ++k) {
    const double f = std::max(factor[k - 1], factor[k]);
    topo.bend_stiffness[k] = ei * f;
    topo.twist_stiffness[k] = gj * f;
  }
  capture_rest_shape(topo, dofs);
  return {std::move(topo), std::move(dofs)};
}

Robot assemble_rod(std::span<const Vec3> nodes, const PhysicalParams& params) {
  if (nodes.size() < 2) throw InvalidInput("a rod needs at least two nodes");
  RobotTopology topo;
  topo.node_count = static_cast<int>(nodes.size());
  topo.flagella_count = 1;
  topo.node_roles.assign(nodes.size(), NodeRole::FlagellumA);
  topo.edge_roles.assign(nodes.size() - 1, EdgeRole::Flagellum);
  topo.edge_flagellum.assign(nodes.size() - 1, 0);
  topo.tip_nodes[0] = 0;
  topo.stretch_stiffness.assign(nodes.size() - 1, params.stretch_stiffness());
  topo.bend_stiffness.assign(nodes.size(), params.bend_stiffness());
  topo.twist_stiffness.assign(nodes.size(), params.twist_stiffness());
  topo.bend_stiffness.front() = topo.bend_stiffness.back() = 0.0;
  topo.twist_stiffness.front() = topo.twist_stiffness.back() = 0.0;
  DofVector dofs(topo.node_count);
  for (int k = 0; k < topo.node_count; ++k) dofs.set_node(k, nodes[k]);
  capture_rest_shape(topo, dofs);
  return {std::move(topo), std::move(dofs)};
}

void capture_rest_shape(RobotTopology& topology, const DofVector& dofs) {
  const int nn = topology.node_count;
  const int ne = nn - 1;
  RestShape& rest = topology.rest;
  rest.edge_length.resize(ne);
  for (int k = 0; k < ne; ++k) {
    rest.edge_length[k] = dofs.edge(k).norm();
    if (!(rest.edge_length[k] > 0.0))
      throw InvalidInput("degenerate edge " + std::to_string(k) + " in rest shape");
  }
  rest.voronoi_length.assign(nn, 0.0);
  for (int k = 1; k + 1 < nn; ++k)
    rest.voronoi_length[k] = 0.5 * (rest.edge_length[k - 1] + rest.edge_length[k]);
  rest.curvature.assign(nn, Eigen::Vector2d::Zero());
  rest.twist.assign(nn, 0.0);
  const FrameSet frames = init_reference_frames(dofs);
  const ElasticState st = elastic_state(topology, dofs, frames);
  rest.curvature = st.curvature;
  rest.twist = st.twist;
}

VecX lumped_masses(const RobotTopology& topology, const PhysicalParams& params) {
  const int ne = topology.edge_count();
  const double line_density = params.density * params.cross_section_area();
  const double r2 = params.rod_radius * params.rod_radius;
  VecX m = VecX::Zero(topology.dof_count());
  for (int k = 0; k < ne; ++k) {
    const double edge_mass = line_density * topology.rest.edge_length[k];
    for (int n : {k, k + 1}) m.segment<3>(DofVector::node_index(n)).array() += 0.5 * edge_mass;
    m[DofVector::twist_index(k)] = 0.5 * edge_mass * r2;
  }
  if (topology.head_nodes[0] >= 0) {
    const double head_mass = params.head_mass();
    for (int h : topology.head_nodes)
      m.segment<3>(DofVector::node_index(h)).array() += head_mass / 3.0;
    // Spin of the head body is carried by the twist of its two edges.
    const double spin_inertia = 0.5 * head_mass * params.head_radius * params.head_radius;
    for (int k = topology.head_nodes[0]; k < topology.head_nodes[2]; ++k)
      m[DofVector::twist_index(k)] = 0.5 * spin_inertia;
  }
  return m;
}

const char* to_string(NodeRole role) {
  switch (role) {
  case NodeRole::FlagellumA: return "flagellumA";
  case NodeRole::Motor1: return "motor1";
  case NodeRole::Head: return "head";
  case NodeRole::Motor2: return "motor2";
  case NodeRole::FlagellumB: return "flagellumB";
  }
  return "?";
}

const char* to_string(EdgeRole role) {
  switch (role) {
  case EdgeRole::Flagellum: return "flagellum";
  case EdgeRole::Motor: return "motor";
  case EdgeRole::Head: return "head";
  }
  return "?";
}

} // namespace flagsim
