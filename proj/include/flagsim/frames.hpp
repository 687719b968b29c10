#pragma once

#include "flagsim/types.hpp"

#include <vector>

namespace flagsim {

/// Per-edge reference (d1, d2, t) and material (m1, m2, t) directors plus the
/// per-node reference twist. ref_twist has one entry per node; the two end
/// entries are always zero.
struct FrameSet {
  std::vector<Vec3> d1, d2, tangent;
  std::vector<Vec3> m1, m2;
  std::vector<double> ref_twist;

  int edge_count() const { return static_cast<int>(tangent.size()); }
};

/// Rotates `v` by the minimal rotation taking unit tangent `from` onto `to`.
/// Antipodal tangents rotate by pi about a deterministic perpendicular axis.
Vec3 parallel_transport(const Vec3& v, const Vec3& from, const Vec3& to);

/// Signed angle from u to v measured about `axis`, in (-pi, pi].
double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis);

/// Deterministic unit vector perpendicular to `t`.
Vec3 perpendicular_seed(const Vec3& t);

/// Space-parallel frames seeded at edge 0; material frames equal reference.
FrameSet init_reference_frames(const DofVector& dofs);

/// Time-parallel transport of each edge's reference frame from the old to the
/// new tangent. Reference twist is recomputed on the branch continuous with
/// the old values; material frames are rebuilt from the new twist angles.
FrameSet time_update_frames(const FrameSet& old_frames, const DofVector& dofs_old,
                            const DofVector& dofs_new);

/// Principal-range reference twist per node.
std::vector<double> reference_twist(const FrameSet& frames);

/// Reference twist on the branch closest to `previous` (unwrapped). Needed
/// because a spinning kinked chain accumulates holonomy beyond +-pi.
std::vector<double> reference_twist(const FrameSet& frames, const std::vector<double>& previous);

/// Rebuilds m1, m2 from d1, d2 and the twist angles in `dofs`.
void material_frames(FrameSet& frames, const DofVector& dofs);

/// Discrete twist tau_k = theta^k - theta^{k-1} + ref_twist_k per node.
std::vector<double> discrete_twist(const FrameSet& frames, const DofVector& dofs);

} // namespace flagsim
