#include "flagsim/elasticity.hpp"

#include <cmath>
#include <string>

namespace flagsim {

namespace {

using Vec11 = Eigen::Matrix<double, 11, 1>;
using Mat11 = Eigen::Matrix<double, 11, 11>;

Mat3 cross_matrix(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

// Position-position blocks of a three-node stencil expressed in the edge
// variables e = x1 - x0, f = x2 - x1.
void scatter_edge_blocks(Mat11& h, const Mat3& hee, const Mat3& hef, const Mat3& hff) {
  const Mat3 hfe = hef.transpose();
  h.block<3, 3>(0, 0) += hee;
  h.block<3, 3>(0, 4) += -hee + hef;
  h.block<3, 3>(4, 0) += -hee + hfe;
  h.block<3, 3>(4, 4) += hee - hef - hfe + hff;
  h.block<3, 3>(0, 8) += -hef;
  h.block<3, 3>(8, 0) += -hfe;
  h.block<3, 3>(4, 8) += hef - hff;
  h.block<3, 3>(8, 4) += hfe - hff;
  h.block<3, 3>(8, 8) += hff;
}

// Mixed position/angle column for angle DOF `col` given d/de and d/df.
void scatter_angle_column(Mat11& h, int col, const Vec3& de, const Vec3& df) {
  const Vec3 c0 = -de;
  const Vec3 c1 = de - df;
  const Vec3 c2 = df;
  h.block<3, 1>(0, col) += c0;
  h.block<3, 1>(4, col) += c1;
  h.block<3, 1>(8, col) += c2;
  h.block<1, 3>(col, 0) += c0.transpose();
  h.block<1, 3>(col, 4) += c1.transpose();
  h.block<1, 3>(col, 8) += c2.transpose();
}

void scatter_edge_gradient(Vec11& g, const Vec3& de, const Vec3& df) {
  g.segment<3>(0) = -de;
  g.segment<3>(4) = de - df;
  g.segment<3>(8) = df;
}

struct TurnGeometry {
  Vec3 te, tf, tilde_t, kb;
  double ne, nf, chi;
};

TurnGeometry turn_geometry(const Vec3& x0, const Vec3& x1, const Vec3& x2) {
  TurnGeometry g;
  const Vec3 e = x1 - x0;
  const Vec3 f = x2 - x1;
  g.ne = e.norm();
  g.nf = f.norm();
  g.te = e / g.ne;
  g.tf = f / g.nf;
  g.chi = 1.0 + g.te.dot(g.tf);
  if (!(g.chi > 1e-12)) throw InvalidInput("elasticity: rod folds back on itself");
  g.tilde_t = (g.te + g.tf) / g.chi;
  g.kb = 2.0 * g.te.cross(g.tf) / g.chi;
  return g;
}

struct BendStencil {
  double kappa1 = 0.0, kappa2 = 0.0;
  Vec11 grad1 = Vec11::Zero(), grad2 = Vec11::Zero();
  Mat11 hess1 = Mat11::Zero(), hess2 = Mat11::Zero();
};

BendStencil bend_stencil(const TurnGeometry& g, const Vec3& m1e, const Vec3& m2e,
                         const Vec3& m1f, const Vec3& m2f, bool with_hessian) {
  BendStencil s;
  const Vec3& te = g.te;
  const Vec3& tf = g.tf;
  const Vec3& tt = g.tilde_t;
  const Vec3& kb = g.kb;
  const double chi = g.chi;
  const Vec3 d1t = (m1e + m1f) / chi;
  const Vec3 d2t = (m2e + m2f) / chi;

  s.kappa1 = 0.5 * kb.dot(m2e + m2f);
  s.kappa2 = -0.5 * kb.dot(m1e + m1f);
  const double k1 = s.kappa1;
  const double k2 = s.kappa2;

  const Vec3 dk1de = (-k1 * tt + tf.cross(d2t)) / g.ne;
  const Vec3 dk1df = (-k1 * tt - te.cross(d2t)) / g.nf;
  const Vec3 dk2de = (-k2 * tt - tf.cross(d1t)) / g.ne;
  const Vec3 dk2df = (-k2 * tt + te.cross(d1t)) / g.nf;

  scatter_edge_gradient(s.grad1, dk1de, dk1df);
  scatter_edge_gradient(s.grad2, dk2de, dk2df);
  s.grad1[3] = -0.5 * kb.dot(m1e);
  s.grad1[7] = -0.5 * kb.dot(m1f);
  s.grad2[3] = -0.5 * kb.dot(m2e);
  s.grad2[7] = -0.5 * kb.dot(m2f);

  if (!with_hessian) return s;

  const double ne2 = g.ne * g.ne;
  const double nf2 = g.nf * g.nf;
  const double nenf = g.ne * g.nf;
  const Mat3 id = Mat3::Identity();
  const Mat3 tt_tt = tt * tt.transpose();
  const Mat3 proj_e = id - te * te.transpose();
  const Mat3 proj_f = id - tf * tf.transpose();
  const Mat3 te_tf = id + te * tf.transpose();

  // kappa1
  {
    const Mat3 a = tf.cross(d2t) * tt.transpose();
    const Mat3 b = te.cross(d2t) * tt.transpose();
    const Mat3 kb_m2e = kb * m2e.transpose();
    const Mat3 kb_m2f = kb * m2f.transpose();
    const Mat3 hee = (2.0 * k1 * tt_tt - a - a.transpose()) / ne2 - k1 / (chi * ne2) * proj_e +
                     (kb_m2e + kb_m2e.transpose()) / (4.0 * ne2);
    const Mat3 hff = (2.0 * k1 * tt_tt + b + b.transpose()) / nf2 - k1 / (chi * nf2) * proj_f +
                     (kb_m2f + kb_m2f.transpose()) / (4.0 * nf2);
    const Mat3 hef = -k1 / (chi * nenf) * te_tf +
                     (2.0 * k1 * tt_tt - a + b.transpose() - cross_matrix(d2t)) / nenf;
    scatter_edge_blocks(s.hess1, hee, hef, hff);
    const Vec3 de_te = (0.5 * kb.dot(m1e) * tt - tf.cross(m1e) / chi) / g.ne;
    const Vec3 de_tf = (0.5 * kb.dot(m1f) * tt - tf.cross(m1f) / chi) / g.ne;
    const Vec3 df_te = (0.5 * kb.dot(m1e) * tt + te.cross(m1e) / chi) / g.nf;
    const Vec3 df_tf = (0.5 * kb.dot(m1f) * tt + te.cross(m1f) / chi) / g.nf;
    scatter_angle_column(s.hess1, 3, de_te, df_te);
    scatter_angle_column(s.hess1, 7, de_tf, df_tf);
    s.hess1(3, 3) += -0.5 * kb.dot(m2e);
    s.hess1(7, 7) += -0.5 * kb.dot(m2f);
  }
  // kappa2
  {
    const Mat3 a = tf.cross(d1t) * tt.transpose();
    const Mat3 b = te.cross(d1t) * tt.transpose();
    const Mat3 kb_m1e = kb * m1e.transpose();
    const Mat3 kb_m1f = kb * m1f.transpose();
    const Mat3 hee = (2.0 * k2 * tt_tt + a + a.transpose()) / ne2 - k2 / (chi * ne2) * proj_e -
                     (kb_m1e + kb_m1e.transpose()) / (4.0 * ne2);
    const Mat3 hff = (2.0 * k2 * tt_tt - b - b.transpose()) / nf2 - k2 / (chi * nf2) * proj_f -
                     (kb_m1f + kb_m1f.transpose()) / (4.0 * nf2);
    const Mat3 hef = -k2 / (chi * nenf) * te_tf +
                     (2.0 * k2 * tt_tt + a - b.transpose() + cross_matrix(d1t)) / nenf;
    scatter_edge_blocks(s.hess2, hee, hef, hff);
    const Vec3 de_te = (0.5 * kb.dot(m2e) * tt - tf.cross(m2e) / chi) / g.ne;
    const Vec3 de_tf = (0.5 * kb.dot(m2f) * tt - tf.cross(m2f) / chi) / g.ne;
    const Vec3 df_te = (0.5 * kb.dot(m2e) * tt + te.cross(m2e) / chi) / g.nf;
    const Vec3 df_tf = (0.5 * kb.dot(m2f) * tt + te.cross(m2f) / chi) / g.nf;
    scatter_angle_column(s.hess2, 3, de_te, df_te);
    scatter_angle_column(s.hess2, 7, de_tf, df_tf);
    s.hess2(3, 3) += 0.5 * kb.dot(m1e);
    s.hess2(7, 7) += 0.5 * kb.dot(m1f);
  }
  return s;
}

struct TwistStencil {
  Vec11 grad = Vec11::Zero();
  Mat11 hess = Mat11::Zero();
};

TwistStencil twist_stencil(const TurnGeometry& g, bool with_hessian) {
  TwistStencil s;
  const Vec3 de = g.kb / (2.0 * g.ne);
  const Vec3 df = g.kb / (2.0 * g.nf);
  scatter_edge_gradient(s.grad, de, df);
  s.grad[3] = -1.0;
  s.grad[7] = 1.0;
  if (!with_hessian) return s;

  const Vec3 ae = g.te + g.tilde_t;
  const Vec3 af = g.tf + g.tilde_t;
  const Mat3 hee = -(g.kb * ae.transpose() + ae * g.kb.transpose()) / (4.0 * g.ne * g.ne);
  const Mat3 hff = -(g.kb * af.transpose() + af * g.kb.transpose()) / (4.0 * g.nf * g.nf);
  const Mat3 hef =
      (2.0 / g.chi * cross_matrix(g.te) - g.kb * g.tilde_t.transpose()) / (2.0 * g.ne * g.nf);
  scatter_edge_blocks(s.hess, hee, hef, hff);
  return s;
}

void scatter(VecX& gradient, BandMatrix* hessian, Eigen::Index start, const Vec11& g,
             const Mat11* h) {
  gradient.segment<11>(start) += g;
  if (hessian == nullptr || h == nullptr) return;
  hessian->add_block(start, *h);
}

void check_sizes(const RobotTopology& topology, const DofVector& dofs, const FrameSet& frames) {
  if (dofs.node_count() != topology.node_count || frames.edge_count() != topology.edge_count())
    throw InvalidInput("elasticity: topology, DOF vector and frames disagree in size");
}

} // namespace

Vec3 curvature_binormal(const Vec3& e, const Vec3& f) {
  const double denom = e.norm() * f.norm() + e.dot(f);
  if (!(denom > 0.0)) throw InvalidInput("curvature_binormal: edges are antiparallel");
  return 2.0 * e.cross(f) / denom;
}

ElasticState elastic_state(const RobotTopology& topology, const DofVector& dofs,
                           const FrameSet& frames) {
  check_sizes(topology, dofs, frames);
  const int nn = topology.node_count;
  const int ne = topology.edge_count();
  ElasticState st;
  st.strain.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const double len = dofs.edge(k).norm();
    if (!(len > 0.0)) throw InvalidInput("degenerate edge " + std::to_string(k));
    st.strain[k] = len / topology.rest.edge_length[k] - 1.0;
  }
  st.curvature_binormal.assign(nn, Vec3::Zero());
  st.curvature.assign(nn, Eigen::Vector2d::Zero());
  st.twist = discrete_twist(frames, dofs);
  for (int k = 1; k + 1 < nn; ++k) {
    const Vec3 kb = curvature_binormal(dofs.edge(k - 1), dofs.edge(k));
    st.curvature_binormal[k] = kb;
    st.curvature[k].x() = 0.5 * kb.dot(frames.m2[k - 1] + frames.m2[k]);
    st.curvature[k].y() = -0.5 * kb.dot(frames.m1[k - 1] + frames.m1[k]);
  }
  return st;
}

ElasticEnergy elastic_energy(const RobotTopology& topology, const DofVector& dofs,
                             const FrameSet& frames) {
  const ElasticState st = elastic_state(topology, dofs, frames);
  const RestShape& rest = topology.rest;
  ElasticEnergy en;
  for (int k = 0; k < topology.edge_count(); ++k)
    en.stretching +=
        0.5 * topology.stretch_stiffness[k] * st.strain[k] * st.strain[k] * rest.edge_length[k];
  for (int k = 1; k + 1 < topology.node_count; ++k) {
    const double len = rest.voronoi_length[k];
    const Eigen::Vector2d dk = st.curvature[k] - rest.curvature[k];
    en.bending += 0.5 * topology.bend_stiffness[k] / len * dk.squaredNorm();
    const double dt = st.twist[k] - rest.twist[k];
    en.twisting += 0.5 * topology.twist_stiffness[k] / len * dt * dt;
  }
  return en;
}

void elastic_gradient_hessian(const RobotTopology& topology, const DofVector& dofs,
                              const FrameSet& frames, VecX& gradient, BandMatrix* hessian) {
  check_sizes(topology, dofs, frames);
  const int nn = topology.node_count;
  const int ne = topology.edge_count();
  const RestShape& rest = topology.rest;
  gradient = VecX::Zero(dofs.size());
  if (hessian != nullptr) {
    if (hessian->size() != dofs.size() || hessian->half_bandwidth() < kElasticHalfBandwidth)
      *hessian = BandMatrix(dofs.size(), kElasticHalfBandwidth);
    else
      hessian->set_zero();
  }

  for (int k = 0; k < ne; ++k) {
    const Vec3 e = dofs.edge(k);
    const double len = e.norm();
    if (!(len > 0.0)) throw InvalidInput("degenerate edge " + std::to_string(k));
    const Vec3 t = e / len;
    const double rest_len = rest.edge_length[k];
    const double eps = len / rest_len - 1.0;
    const double ea = topology.stretch_stiffness[k];
    const Vec3 g = ea * eps * t;
    const Eigen::Index i0 = DofVector::node_index(k);
    const Eigen::Index i1 = DofVector::node_index(k + 1);
    gradient.segment<3>(i0) -= g;
    gradient.segment<3>(i1) += g;
    if (hessian != nullptr) {
      const Mat3 tt = t * t.transpose();
      const Mat3 h = ea * (tt / rest_len + eps / len * (Mat3::Identity() - tt));
      Eigen::Matrix<double, 7, 7> block = Eigen::Matrix<double, 7, 7>::Zero();
      block.topLeftCorner<3, 3>() = h;
      block.bottomRightCorner<3, 3>() = h;
      block.topRightCorner<3, 3>() = -h;
      block.bottomLeftCorner<3, 3>() = -h;
      hessian->add_block(i0, block);
    }
  }

  const bool with_hessian = hessian != nullptr;
  for (int k = 1; k + 1 < nn; ++k) {
    const TurnGeometry geo = turn_geometry(dofs.node(k - 1), dofs.node(k), dofs.node(k + 1));
    const double len = rest.voronoi_length[k];
    const Eigen::Index start = DofVector::node_index(k - 1);

    const BendStencil b =
        bend_stencil(geo, frames.m1[k - 1], frames.m2[k - 1], frames.m1[k], frames.m2[k],
                     with_hessian);
    const double cb = topology.bend_stiffness[k] / len;
    const double dk1 = b.kappa1 - rest.curvature[k].x();
    const double dk2 = b.kappa2 - rest.curvature[k].y();
    const Vec11 gb = cb * (dk1 * b.grad1 + dk2 * b.grad2);
    Mat11 hb;
    if (with_hessian)
      hb = cb * (b.grad1 * b.grad1.transpose() + dk1 * b.hess1 + b.grad2 * b.grad2.transpose() +
                 dk2 * b.hess2);
    scatter(gradient, hessian, start, gb, with_hessian ? &hb : nullptr);

    const TwistStencil tw = twist_stencil(geo, with_hessian);
    const double ct = topology.twist_stiffness[k] / len;
    const double tau = dofs.theta(k) - dofs.theta(k - 1) + frames.ref_twist[k];
    const double dtau = tau - rest.twist[k];
    const Vec11 gt = ct * dtau * tw.grad;
    Mat11 ht;
    if (with_hessian) ht = ct * (tw.grad * tw.grad.transpose() + dtau * tw.hess);
    scatter(gradient, hessian, start, gt, with_hessian ? &ht : nullptr);
  }
}

VecX elastic_force(const RobotTopology& topology, const DofVector& dofs, const FrameSet& frames) {
  VecX g;
  elastic_gradient_hessian(topology, dofs, frames, g, nullptr);
  return -g;
}

BandMatrix elastic_jacobian(const RobotTopology& topology, const DofVector& dofs,
                            const FrameSet& frames) {
  VecX g;
  BandMatrix h(dofs.size(), kElasticHalfBandwidth);
  elastic_gradient_hessian(topology, dofs, frames, g, &h);
  return h;
}

} // namespace flagsim
