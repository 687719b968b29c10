#pragma once

#include "flagsim/banded.hpp"
#include "flagsim/frames.hpp"
#include "flagsim/rod_model.hpp"

namespace flagsim {

struct ElasticEnergy {
  double stretching = 0.0;
  double bending = 0.0;
  double twisting = 0.0;
  double total() const { return stretching + bending + twisting; }
};

/// Strain measures of one configuration. Curvature binormal and material
/// curvatures are per node (zero at the ends); strain is per edge.
struct ElasticState {
  std::vector<double> strain;
  std::vector<Vec3> curvature_binormal;
  std::vector<Eigen::Vector2d> curvature;
  std::vector<double> twist;
};

/// Half-bandwidth of the elastic Hessian: a bending stencil spans DOFs
/// 4(k-1) .. 4(k+1)+2.
inline constexpr int kElasticHalfBandwidth = 10;

/// Discrete curvature binormal 2 e x f / (|e||f| + e.f).
Vec3 curvature_binormal(const Vec3& e, const Vec3& f);

ElasticState elastic_state(const RobotTopology& topology, const DofVector& dofs,
                           const FrameSet& frames);

ElasticEnergy elastic_energy(const RobotTopology& topology, const DofVector& dofs,
                             const FrameSet& frames);

/// -dE/dq, length 4N-1.
VecX elastic_force(const RobotTopology& topology, const DofVector& dofs, const FrameSet& frames);

/// d^2E/dq^2 (the elastic part of the Newton Jacobian).
BandMatrix elastic_jacobian(const RobotTopology& topology, const DofVector& dofs,
                            const FrameSet& frames);

/// Gradient (not force) and optionally the Hessian in one pass.
void elastic_gradient_hessian(const RobotTopology& topology, const DofVector& dofs,
                              const FrameSet& frames, VecX& gradient, BandMatrix* hessian);

} // namespace flagsim
