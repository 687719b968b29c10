#include "flagsim/frames.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace flagsim {

namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr double kAntipodalCross = 1e-12;

void require_unit(const Vec3& v, const char* name) {
  if (std::abs(v.norm() - 1.0) > kUnitTolerance)
    throw InvalidInput(std::string("parallel_transport: ") + name + " is not a unit vector");
}

Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return c * v + s * axis.cross(v) + (1.0 - c) * axis.dot(v) * axis;
}

Vec3 unit_tangent(const DofVector& dofs, int k) {
  const Vec3 e = dofs.edge(k);
  const double len = e.norm();
  if (!(len > 1e-14))
    throw InvalidInput("degenerate (zero-length) edge " + std::to_string(k));
  return e / len;
}

// Keeps d1 exactly perpendicular to t and unit length; d2 completes the triad.
void orthonormalize(Vec3& d1, Vec3& d2, const Vec3& t) {
  d1 -= d1.dot(t) * t;
  d1.normalize();
  d2 = t.cross(d1);
}

} // namespace

Vec3 perpendicular_seed(const Vec3& t) {
  const Vec3 a = std::abs(t.z()) > 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
  return (a - a.dot(t) * t).normalized();
}

Vec3 parallel_transport(const Vec3& v, const Vec3& from, const Vec3& to) {
  require_unit(from, "t_from");
  require_unit(to, "t_to");
  const Vec3 b = from.cross(to);
  const double bn = b.norm();
  if (bn < kAntipodalCross) {
    if (from.dot(to) > 0.0) return v;
    // Kinked rod: rotate by pi about a deterministic axis perpendicular to `from`.
    const Vec3 axis = perpendicular_seed(from);
    return 2.0 * axis.dot(v) * axis - v;
  }
  const Vec3 bh = b / bn;
  const Vec3 n0 = from.cross(bh);
  const Vec3 n1 = to.cross(bh);
  return v.dot(from) * to + v.dot(n0) * n1 + v.dot(bh) * bh;
}

double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis) {
  const double s = u.cross(v).dot(axis);
  const double c = u.dot(v);
  const double a = std::atan2(s, c);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

FrameSet init_reference_frames(const DofVector& dofs) {
  const int ne = dofs.edge_count();
  FrameSet f;
  f.tangent.resize(ne);
  f.d1.resize(ne);
  f.d2.resize(ne);
  for (int k = 0; k < ne; ++k) f.tangent[k] = unit_tangent(dofs, k);

  f.d1[0] = perpendicular_seed(f.tangent[0]);
  f.d2[0] = f.tangent[0].cross(f.d1[0]);
  for (int k = 1; k < ne; ++k) {
    f.d1[k] = parallel_transport(f.d1[k - 1], f.tangent[k - 1], f.tangent[k]);
    orthonormalize(f.d1[k], f.d2[k], f.tangent[k]);
  }
  f.ref_twist = reference_twist(f);
  material_frames(f, dofs);
  return f;
}

FrameSet time_update_frames(const FrameSet& old_frames, const DofVector& dofs_old,
                            const DofVector& dofs_new) {
  const int ne = dofs_new.edge_count();
  if (dofs_old.edge_count() != ne || old_frames.edge_count() != ne)
    throw InvalidInput("time_update_frames: topology mismatch");
  FrameSet f;
  f.tangent.resize(ne);
  f.d1.resize(ne);
  f.d2.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const Vec3 t_new = unit_tangent(dofs_new, k);
    f.tangent[k] = t_new;
    f.d1[k] = parallel_transport(old_frames.d1[k], old_frames.tangent[k], t_new);
    orthonormalize(f.d1[k], f.d2[k], t_new);
  }
  f.ref_twist = reference_twist(f, old_frames.ref_twist);
  material_frames(f, dofs_new);
  return f;
}

std::vector<double> reference_twist(const FrameSet& frames) {
  const int ne = frames.edge_count();
  std::vector<double> tw(ne + 1, 0.0);
  for (int k = 1; k < ne; ++k) {
    const Vec3 u = parallel_transport(frames.d1[k - 1], frames.tangent[k - 1], frames.tangent[k]);
    tw[k] = signed_angle(u, frames.d1[k], frames.tangent[k]);
  }
  return tw;
}

std::vector<double> reference_twist(const FrameSet& frames, const std::vector<double>& previous) {
  const int ne = frames.edge_count();
  if (static_cast<int>(previous.size()) != ne + 1)
    throw InvalidInput("reference_twist: previous twist has wrong length");
  std::vector<double> tw(ne + 1, 0.0);
  for (int k = 1; k < ne; ++k) {
    const Vec3& t = frames.tangent[k];
    Vec3 u = parallel_transport(frames.d1[k - 1], frames.tangent[k - 1], t);
    u = rotate_about(u, t, previous[k]);
    tw[k] = previous[k] + signed_angle(u, frames.d1[k], t);
  }
  return tw;
}

void material_frames(FrameSet& frames, const DofVector& dofs) {
  const int ne = frames.edge_count();
  frames.m1.resize(ne);
  frames.m2.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const double c = std::cos(dofs.theta(k));
    const double s = std::sin(dofs.theta(k));
    frames.m1[k] = c * frames.d1[k] + s * frames.d2[k];
    frames.m2[k] = -s * frames.d1[k] + c * frames.d2[k];
  }
}

std::vector<double> discrete_twist(const FrameSet& frames, const DofVector& dofs) {
  const int ne = frames.edge_count();
  std::vector<double> tau(ne + 1, 0.0);
  for (int k = 1; k < ne; ++k) tau[k] = dofs.theta(k) - dofs.theta(k - 1) + frames.ref_twist[k];
  return tau;
}

} // namespace flagsim
