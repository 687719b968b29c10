#include "flagsim/contact.hpp"

#include "flagsim/frames.hpp"

#include <algorithm>
#include <cmath>

namespace flagsim {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Closest parameter on segment p0 + s d to point x.
double project(const Vec3& x, const Vec3& p0, const Vec3& d, double dd) {
  return clamp01((x - p0).dot(d) / dd);
}

} // namespace

SegmentDistance min_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  if (!(a > 0.0) || !(e > 0.0)) throw InvalidInput("min_distance: zero-length edge");
  const double b = d1.dot(d2);
  const double c = d1.dot(r);
  const double f = d2.dot(r);
  const double denom = a * e - b * b;

  double s = 0.0;
  double t = 0.0;
  if (denom <= 1e-12 * a * e) {
    // Parallel: take the middle of the overlap of q's shadow on p, or the
    // nearest end when the shadows do not overlap.
    const double sq0 = -c / a;
    const double sq1 = (b - c) / a;
    const double lo = std::max(0.0, std::min(sq0, sq1));
    const double hi = std::min(1.0, std::max(sq0, sq1));
    if (lo <= hi)
      s = 0.5 * (lo + hi);
    else
      s = std::max(sq0, sq1) < 0.0 ? 0.0 : 1.0;
    t = project(p0 + s * d1, q0, d2, e);
    s = project(q0 + t * d2, p0, d1, a);
  } else {
    s = clamp01((b * f - c * e) / denom);
    t = (b * s + f) / e;
    if (t < 0.0) {
      t = 0.0;
      s = clamp01(-c / a);
    } else if (t > 1.0) {
      t = 1.0;
      s = clamp01((b - c) / a);
    }
  }

  SegmentDistance out;
  out.s = s;
  out.t = t;
  const Vec3 diff = (q0 + t * d2) - (p0 + s * d1);
  out.distance = diff.norm();
  const double scale = std::sqrt(std::max(a, e));
  if (out.distance > 1e-14 * scale) {
    out.normal = diff / out.distance;
  } else {
    const Vec3 cr = d1.cross(d2);
    out.normal = cr.norm() > 1e-12 * a * e ? cr.normalized() : perpendicular_seed(d1 / std::sqrt(a));
  }
  return out;
}

std::array<Vec3, 4> penalty_response(const ContactPair& pair, double stiffness) {
  if (!(stiffness > 0.0)) throw InvalidInput("penalty_response: stiffness must be positive");
  std::array<Vec3, 4> f{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  if (pair.penetration <= 0.0) return f;
  const Vec3 push = stiffness * pair.penetration * pair.normal;
  f[0] = -(1.0 - pair.s) * push;
  f[1] = -pair.s * push;
  f[2] = (1.0 - pair.t) * push;
  f[3] = pair.t * push;
  return f;
}

bool contact_candidate(const RobotTopology& topology, int a, int b) {
  if (a == b) return false;
  const int fa = topology.edge_flagellum[a];
  const int fb = topology.edge_flagellum[b];
  if (fa < 0 || fb < 0) return false;
  return fa != fb || std::abs(a - b) > 1;
}

ContactPair evaluate_pair(const DofVector& dofs, int l, int m, double rod_radius) {
  const SegmentDistance sd =
      min_distance(dofs.node(l), dofs.node(l + 1), dofs.node(m), dofs.node(m + 1));
  ContactPair p;
  p.l = l;
  p.m = m;
  p.s = sd.s;
  p.t = sd.t;
  p.distance = sd.distance;
  p.normal = sd.normal;
  p.penetration = 2.0 * rod_radius - sd.distance;
  return p;
}

std::vector<ContactPair> detect_all(const RobotTopology& topology, const DofVector& dofs,
                                    double rod_radius) {
  std::vector<ContactPair> out;
  const std::vector<int> edges = topology.flagellum_edges();
  const double reach = 2.0 * rod_radius;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int l = edges[i];
    const Vec3 a0 = dofs.node(l);
    const Vec3 a1 = dofs.node(l + 1);
    const Vec3 ca = 0.5 * (a0 + a1);
    const double ra = 0.5 * (a1 - a0).norm();
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const int m = edges[j];
      if (!contact_candidate(topology, l, m)) continue;
      const Vec3 b0 = dofs.node(m);
      const Vec3 b1 = dofs.node(m + 1);
      const double rb = 0.5 * (b1 - b0).norm();
      if ((0.5 * (b0 + b1) - ca).norm() > ra + rb + reach) continue;
      ContactPair p = evaluate_pair(dofs, l, m, rod_radius);
      if (p.penetration > 0.0) out.push_back(p);
    }
  }
  return out;
}

} // namespace flagsim
