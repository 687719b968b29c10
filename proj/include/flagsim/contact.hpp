#pragma once

#include "flagsim/rod_model.hpp"

#include <array>
#include <vector>

namespace flagsim {

/// Closest points between two segments. `normal` points from the closest
/// point on the first segment toward the second.
struct SegmentDistance {
  double distance = 0.0;
  double s = 0.0;
  double t = 0.0;
  Vec3 normal = Vec3::UnitX();
};

struct ContactPair {
  int l = -1;
  int m = -1;
  double s = 0.0;
  double t = 0.0;
  double distance = 0.0;
  Vec3 normal = Vec3::UnitX();
  double penetration = 0.0;  // 2 r0 - distance
};

/// Exact clamped segment-segment distance. For parallel segments the
/// midpoint of the overlap interval is chosen.
SegmentDistance min_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

/// Penalty forces on (x_l, x_{l+1}, x_m, x_{m+1}): k_c * p along -n on edge l
/// with weights (1-s, s) and along +n on edge m with weights (1-t, t).
std::array<Vec3, 4> penalty_response(const ContactPair& pair, double stiffness);

/// True when edges a and b may be tested for contact: both are flagellum
/// edges and, on the same flagellum, they are not neighbours.
bool contact_candidate(const RobotTopology& topology, int a, int b);

/// Geometry of a single candidate pair against the contact radius 2 r0.
ContactPair evaluate_pair(const DofVector& dofs, int l, int m, double rod_radius);

/// All candidate pairs (l < m) with distance below 2 r0, sorted by (l, m).
std::vector<ContactPair> detect_all(const RobotTopology& topology, const DofVector& dofs,
                                    double rod_radius);

} // namespace flagsim
