#include <doctest.h>

#include "../support/oracles.hpp"

#include "flagsim/elasticity.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace flagsim;

namespace {

Robot straight_rod(int nodes, double spacing) {
  std::vector<Vec3> pts;
  for (int k = 0; k < nodes; ++k) pts.emplace_back(spacing * k, 0.0, 0.0);
  return assemble_rod(pts, PhysicalParams{});
}

}  // namespace

TEST_CASE("undeformed rod has zero energy and force") {
  std::mt19937_64 rng(1);
  const oracle::RandomRod r = oracle::random_rod(rng, 10);
  const FrameSet f = init_reference_frames(r.robot.dofs);
  const ElasticEnergy e = elastic_energy(r.robot.topology, r.robot.dofs, f);
  CHECK(e.stretching == 0.0);
  CHECK(e.bending < 1e-25);
  CHECK(e.twisting < 1e-25);
  CHECK(elastic_force(r.robot.topology, r.robot.dofs, f).norm() < 1e-12);
}

TEST_CASE("single edge stretched one percent") {
  PhysicalParams p;
  CHECK(p.stretch_stiffness() == doctest::Approx(10.09).epsilon(1e-3));
  const Vec3 pts[2] = {Vec3::Zero(), Vec3(5e-3, 0, 0)};
  const Robot rod = assemble_rod(pts, p);
  DofVector d = rod.dofs;
  d.set_node(1, Vec3(5.05e-3, 0, 0));
  const ElasticEnergy e = elastic_energy(rod.topology, d, init_reference_frames(d));
  const double expected = 0.5 * p.stretch_stiffness() * 0.01 * 0.01 * 5e-3;
  CHECK(e.stretching == doctest::Approx(expected).epsilon(1e-12));
  CHECK(e.stretching == doctest::Approx(2.52e-6).epsilon(2e-3));
  CHECK(e.bending == 0.0);
  CHECK(e.twisting == 0.0);
}

TEST_CASE("right-angle bend") {
  const Vec3 ab = curvature_binormal(Vec3::UnitX(), Vec3::UnitY());
  CHECK(ab.norm() == doctest::Approx(2.0 * std::tan(std::numbers::pi / 4)));
  CHECK(ab.normalized().isApprox(Vec3::UnitZ()));

  PhysicalParams p;
  const Vec3 straight[3] = {Vec3::Zero(), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  const Robot rod = assemble_rod(straight, p);
  DofVector d = rod.dofs;
  d.set_node(2, Vec3(1, 1, 0));
  const FrameSet f = time_update_frames(init_reference_frames(rod.dofs), rod.dofs, d);
  const ElasticState st = elastic_state(rod.topology, d, f);
  CHECK(st.curvature_binormal[1].norm() == doctest::Approx(2.0));
  CHECK(st.curvature[1].norm() == doctest::Approx(2.0));
  const ElasticEnergy e = elastic_energy(rod.topology, d, f);
  // Voronoi length of two unit edges is 1.
  CHECK(e.bending == doctest::Approx(0.5 * p.bend_stiffness() * 4.0));
  CHECK(e.stretching < 1e-30);
}

TEST_CASE("stretched three-node rod") {
  PhysicalParams p;
  const Vec3 pts[3] = {Vec3::Zero(), Vec3(1e-2, 0, 0), Vec3(2e-2, 0, 0)};
  const Robot rod = assemble_rod(pts, p);
  DofVector d = rod.dofs;
  d.set_node(1, Vec3(1.01e-2, 0, 0));  // strains 1% and 2%
  d.set_node(2, Vec3(2.03e-2, 0, 0));
  const double e0 = d.edge(0).norm() / 1e-2 - 1.0;
  const double e1 = d.edge(1).norm() / 1e-2 - 1.0;
  const VecX f = elastic_force(rod.topology, d, init_reference_frames(d));
  const double ea = p.stretch_stiffness();
  CHECK(f[4] == doctest::Approx(ea * (e1 - e0)));
  CHECK(std::abs(f[5]) < 1e-12);
  CHECK(std::abs(f[6]) < 1e-12);
  CHECK(f[0] == doctest::Approx(ea * e0));
  CHECK(f[8] == doctest::Approx(-ea * e1));
  CHECK(f[0] > 0.0);  // pulled toward the middle
}

TEST_CASE("force and Jacobian match finite differences") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const oracle::RandomRod r = oracle::random_rod(rng, 10);
    const RobotTopology& topo = r.robot.topology;
    const VecX f = elastic_force(topo, r.dofs, r.frames);
    const VecX fd = oracle::fd_force(topo, r.frames, r.dofs, 1e-8, 1e-6);
    CHECK(oracle::relative_error(f, fd) < 1e-4);

    const MatX k = elastic_jacobian(topo, r.dofs, r.frames).to_dense();
    const MatX kd = oracle::fd_hessian(topo, r.frames, r.dofs, 1e-8, 1e-6);
    CHECK((k - kd).cwiseAbs().maxCoeff() < 1e-8 * kd.cwiseAbs().maxCoeff());
  }

  // Second differences of the energy on one rod, without going through the
  // force.
  const oracle::RandomRod r = oracle::random_rod(rng, 6);
  const RobotTopology& topo = r.robot.topology;
  const MatX k = elastic_jacobian(topo, r.dofs, r.frames).to_dense();
  const Eigen::Index n = r.dofs.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double hi = (i % 4 == 3) ? 1e-4 : 1e-6, hj = (j % 4 == 3) ? 1e-4 : 1e-6;
      auto e = [&](double si, double sj) {
        VecX q = r.dofs.values();
        q[i] += si * hi;
        q[j] += sj * hj;
        return oracle::energy_at(topo, r.frames, r.dofs, q);
      };
      const double kd = (e(1, 1) - e(1, -1) - e(-1, 1) + e(-1, -1)) / (4.0 * hi * hj);
      worst = std::max(worst, std::abs(k(i, j) - kd));
    }
  CHECK(worst < 1e-6 * k.cwiseAbs().maxCoeff());
}

TEST_CASE("Jacobian of a straight rod") {
  const Robot rod = straight_rod(5, 1e-2);
  const FrameSet f = init_reference_frames(rod.dofs);
  const MatX k = elastic_jacobian(rod.topology, rod.dofs, f).to_dense();
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-9 * k.cwiseAbs().maxCoeff());
  const Eigen::SelfAdjointEigenSolver<MatX> es(k);
  const VecX ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  int near_zero = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    CHECK(ev[i] > -1e-9 * top);
    if (std::abs(ev[i]) < 1e-9 * top) ++near_zero;
  }
  // Rotation about the rod axis moves no node, so a straight rod has five
  // rigid-body modes plus the uniform twist.
  CHECK(near_zero == 6);
}

TEST_CASE("Jacobian stencil") {
  std::mt19937_64 rng(5);
  const oracle::RandomRod r = oracle::random_rod(rng, 12);
  const BandMatrix k = elastic_jacobian(r.robot.topology, r.dofs, r.frames);
  CHECK(k.half_bandwidth() == kElasticHalfBandwidth);
  const MatX dense = k.to_dense();
  for (Eigen::Index i = 0; i < dense.rows(); ++i)
    for (Eigen::Index j = 0; j < dense.cols(); ++j)
      if (std::abs(i - j) > kElasticHalfBandwidth) CHECK(dense(i, j) == 0.0);
  // A bending stencil never couples nodes more than two apart.
  CHECK(dense(0, 4 * 3) == 0.0);
}
