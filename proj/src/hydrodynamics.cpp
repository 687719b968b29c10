#include "flagsim/hydrodynamics.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace flagsim {

namespace {

using std::numbers::pi;

// Integrals over u in [ua, ub] with R = sqrt(u^2 + h^2). Written to avoid the
// cancellation that appears when both limits lie on the same side of the
// foot point and far from it.
struct LineIntegrals {
  double inv_r;      // int 1/R
  double u_inv_r;    // int u/R
  double inv_r3;     // int 1/R^3
  double u_inv_r3;   // int u/R^3
  double uu_inv_r3;  // int u^2/R^3
  double uuu_inv_r3; // int u^3/R^3
};

LineIntegrals line_integrals(double ua, double ub, double h2) {
  const double ra = std::sqrt(ua * ua + h2);
  const double rb = std::sqrt(ub * ub + h2);
  LineIntegrals li;
  // asinh(ub/h) - asinh(ua/h) as one log; u + R is formed without
  // cancellation for either sign of u.
  const auto plus = [h2](double u, double r) { return u >= 0.0 ? u + r : h2 / (r - u); };
  li.inv_r = std::log(plus(ub, rb) / plus(ua, ra));
  const double du2 = (ub - ua) * (ub + ua);
  li.u_inv_r = du2 / (ra + rb);
  if (ua * ub > 0.0)
    li.inv_r3 = du2 / (ra * rb * (ub * ra + ua * rb));
  else
    li.inv_r3 = (ub / rb - ua / ra) / h2;
  li.u_inv_r3 = du2 / (ra * rb * (ra + rb));
  li.uu_inv_r3 = li.inv_r - h2 * li.inv_r3;
  li.uuu_inv_r3 = li.u_inv_r - h2 * li.u_inv_r3;
  return li;
}

} // namespace

Mat3 regularized_stokeslet(const Vec3& r, double eps) {
  const double r2 = r.squaredNorm();
  const double e2 = eps * eps;
  const double big_r = std::sqrt(r2 + e2);
  const double r3 = big_r * big_r * big_r;
  return Mat3::Identity() * ((r2 + 2.0 * e2) / r3) + r * r.transpose() / r3;
}

std::array<Mat3, 2> rss_segment_kernels(const Vec3& x, const Vec3& a, const Vec3& b,
                                        double eps) {
  if (!(eps > 0.0)) throw InvalidInput("rss: regularization must be positive");
  const Vec3 seg = b - a;
  const double len = seg.norm();
  if (!(len > 0.0)) throw InvalidInput("rss: zero-length segment");
  const Vec3 tau = seg / len;
  const Vec3 x0 = x - a;
  const double c = x0.dot(tau);
  const double e2 = eps * eps;
  const double h2 = (x0 - c * tau).squaredNorm() + e2;
  const LineIntegrals li = line_integrals(-c, len - c, h2);

  // Moments in the segment parameter s = u + c.
  const double p0 = li.inv_r;
  const double p1 = li.u_inv_r + c * li.inv_r;
  const double q0 = li.inv_r3;
  const double q1 = li.u_inv_r3 + c * q0;
  const double q2 = li.uu_inv_r3 + 2.0 * c * li.u_inv_r3 + c * c * q0;
  const double q3 = li.uuu_inv_r3 + 3.0 * c * li.uu_inv_r3 + 3.0 * c * c * li.u_inv_r3 +
                    c * c * c * q0;

  const Mat3 xx = x0 * x0.transpose();
  const Mat3 xt = x0 * tau.transpose() + tau * x0.transpose();
  const Mat3 tt = tau * tau.transpose();
  // Weight s/L carried by b; weight 1 - s/L by a.
  const double inv_len = 1.0 / len;
  Mat3 kb = Mat3::Identity() * (p1 + e2 * q1) + xx * q1 - xt * q2 + tt * q3;
  kb *= inv_len;
  const Mat3 whole = Mat3::Identity() * (p0 + e2 * q0) + xx * q0 - xt * q1 + tt * q2;
  return {whole - kb, kb};
}

Mat3 rss_segment_kernel(const Vec3& x, const Vec3& a, const Vec3& b, double eps) {
  const std::array<Mat3, 2> k = rss_segment_kernels(x, a, b, eps);
  return k[0] + k[1];
}

Vec3 rss_segment_velocity(const Vec3& eval_point, const Vec3& a, const Vec3& b,
                          const Vec3& force_density, double eps, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("rss: viscosity must be positive");
  return rss_segment_kernel(eval_point, a, b, eps) * force_density / (8.0 * pi * mu);
}

MobilityMatrix assemble_mobility(const RobotTopology& topology, const DofVector& dofs, double eps,
                                 double mu) {
  if (!(eps > 0.0)) throw InvalidInput("assemble_mobility: regularization must be positive");
  if (!(mu > 0.0)) throw InvalidInput("assemble_mobility: viscosity must be positive");
  MobilityMatrix mob;
  mob.nodes = topology.flagellum_nodes();
  const auto m = static_cast<Eigen::Index>(mob.nodes.size());
  std::unordered_map<int, Eigen::Index> local;
  for (Eigen::Index i = 0; i < m; ++i) local[mob.nodes[i]] = i;

  std::vector<Vec3> pos(m);
  for (Eigen::Index i = 0; i < m; ++i) pos[i] = dofs.node(mob.nodes[i]);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if ((pos[i] - pos[j]).norm() < 1e-2 * eps)
        throw InvalidInput("assemble_mobility: coincident nodes " + std::to_string(mob.nodes[i]) +
                           " and " + std::to_string(mob.nodes[j]));

  // Nodal force F_k becomes the density F_k / l_k at node k, interpolated
  // linearly along each segment; l_k is half the adjacent segment lengths.
  const std::vector<int> edges = topology.flagellum_edges();
  std::vector<double> share(m, 0.0);
  for (int e : edges) {
    const double len = (pos[local.at(e + 1)] - pos[local.at(e)]).norm();
    share[local.at(e)] += 0.5 * len;
    share[local.at(e + 1)] += 0.5 * len;
  }
  const double scale = 1.0 / (8.0 * pi * mu);
  MatX a = MatX::Zero(3 * m, 3 * m);
  for (int e : edges) {
    const Eigen::Index ia = local.at(e);
    const Eigen::Index ib = local.at(e + 1);
    const double wa = scale / share[ia];
    const double wb = scale / share[ib];
    for (Eigen::Index i = 0; i < m; ++i) {
      const std::array<Mat3, 2> k = rss_segment_kernels(pos[i], pos[ia], pos[ib], eps);
      a.block<3, 3>(3 * i, 3 * ia) += k[0] * wa;
      a.block<3, 3>(3 * i, 3 * ib) += k[1] * wb;
    }
  }
  mob.matrix = 0.5 * (a + a.transpose());
  return mob;
}

VecX drag_forces(const MobilityMatrix& mobility, const VecX& velocities) {
  VecX out = VecX::Zero(velocities.size());
  const auto m = static_cast<Eigen::Index>(mobility.nodes.size());
  if (m == 0) return out;
  VecX u(3 * m);
  for (Eigen::Index i = 0; i < m; ++i)
    u.segment<3>(3 * i) = velocities.segment<3>(DofVector::node_index(mobility.nodes[i]));
  if (u.isZero(0.0)) return out;
  const Eigen::LLT<MatX> llt(mobility.matrix);
  if (llt.info() != Eigen::Success)
    throw SolverFailure("drag_forces: mobility matrix is not positive definite");
  const VecX f = llt.solve(-u);
  for (Eigen::Index i = 0; i < m; ++i)
    out.segment<3>(DofVector::node_index(mobility.nodes[i])) = f.segment<3>(3 * i);
  return out;
}

HeadDrag head_drag(const Vec3& head_velocity, double head_spin, const PhysicalParams& params) {
  const double mu = params.viscosity;
  const double rh = params.head_radius;
  HeadDrag d;
  d.force = -params.drag_translational * 6.0 * pi * mu * rh * head_velocity;
  d.torque = -params.drag_rotational * 8.0 * pi * mu * rh * rh * rh * head_spin;
  return d;
}

HeadMotion head_motion(const RobotTopology& topology, const DofVector& dofs,
                       const VecX& velocities) {
  HeadMotion hm;
  const auto& h = topology.head_nodes;
  for (int n : h) {
    hm.centroid += dofs.node(n) / 3.0;
    hm.velocity += velocities.segment<3>(DofVector::node_index(n)) / 3.0;
  }
  const Vec3 span = dofs.node(h[2]) - dofs.node(h[0]);
  if (topology.head_layout == HeadLayout::Axial) {
    hm.axis = span.normalized();
    hm.spin = 0.5 * (velocities[DofVector::twist_index(h[0])] +
                     velocities[DofVector::twist_index(h[1])]);
    return hm;
  }
  // Lateral head: the axis follows the two motor edges, made perpendicular to
  // the head line; spin is the rotation rate of the head line about it.
  Vec3 axis = (dofs.node(h[0]) - dofs.node(topology.motor_nodes[0])).normalized();
  if (topology.motor_nodes[1] >= 0)
    axis += (dofs.node(h[2]) - dofs.node(topology.motor_nodes[1])).normalized();
  const double span2 = span.squaredNorm();
  axis -= axis.dot(span) / span2 * span;
  hm.axis = axis.normalized();
  const Vec3 span_rate = velocities.segment<3>(DofVector::node_index(h[2])) -
                         velocities.segment<3>(DofVector::node_index(h[0]));
  hm.spin = hm.axis.dot(span.cross(span_rate)) / span2;
  return hm;
}

void apply_head_drag(const RobotTopology& topology, const DofVector& dofs, const HeadMotion& motion,
                     const HeadDrag& drag, VecX& external_force) {
  const auto& h = topology.head_nodes;
  for (int n : h) external_force.segment<3>(DofVector::node_index(n)) += drag.force / 3.0;
  if (topology.head_layout == HeadLayout::Axial) {
    external_force[DofVector::twist_index(h[0])] += 0.5 * drag.torque;
    external_force[DofVector::twist_index(h[1])] += 0.5 * drag.torque;
    return;
  }
  const Vec3 span = dofs.node(h[2]) - dofs.node(h[0]);
  const Vec3 couple = drag.torque * motion.axis.cross(span) / span.squaredNorm();
  external_force.segment<3>(DofVector::node_index(h[2])) += couple;
  external_force.segment<3>(DofVector::node_index(h[0])) -= couple;
}

} // namespace flagsim
