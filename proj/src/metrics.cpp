#include "flagsim/metrics.hpp"

#include <cmath>
#include <numbers>

namespace flagsim {

Normalization Normalization::from(const PhysicalParams& params, double length_override) {
  Normalization n;
  n.length = length_override > 0.0 ? length_override : params.axial_length;
  n.bend_stiffness = params.bend_stiffness();
  n.viscosity = params.viscosity;
  return n;
}

double Normalization::omega(double w) const {
  return w * viscosity * std::pow(length, 4) / bend_stiffness;
}

double Normalization::omega_inverse(double w_bar) const {
  return w_bar * bend_stiffness / (viscosity * std::pow(length, 4));
}

double Normalization::position(double x) const { return x / length; }

double Normalization::force(double f) const { return f * length * length / bend_stiffness; }

double Normalization::time(double t, double w) { return t * w / (2.0 * std::numbers::pi); }

double normalized_pitch(double pitch, double helix_radius) {
  if (!(helix_radius > 0.0)) throw InvalidInput("helix_radius must be positive");
  return pitch / helix_radius;
}

double propulsive_force(const HeadDrag& drag) { return -drag.force.x(); }

std::optional<double> efficiency(double fp, double head_torque, double head_radius) {
  if (head_torque == 0.0 || !std::isfinite(head_torque)) return std::nullopt;
  return fp * head_radius / std::abs(head_torque);
}

double apparent_length(const RobotTopology& topology, const DofVector& dofs, int flagellum) {
  if (flagellum >= topology.flagella_count)
    throw InvalidInput("no flagellum " + std::to_string(flagellum));
  const Vec3 xh = dofs.node(topology.head_center());
  if (flagellum >= 0) return (dofs.node(topology.tip_nodes[flagellum]) - xh).norm();
  double sum = 0.0;
  for (int i = 0; i < topology.flagella_count; ++i)
    sum += (dofs.node(topology.tip_nodes[i]) - xh).norm();
  return sum / topology.flagella_count;
}

double head_path_length(const Trajectory& tr) {
  double len = 0.0;
  for (std::size_t i = 1; i < tr.size(); ++i) len += (tr[i].head - tr[i - 1].head).norm();
  return len;
}

double head_angular_velocity(const Trajectory& tr, double t0, double t1) {
  if (!(t1 > t0)) throw InvalidInput("empty averaging window");
  double angle = 0.0;
  double covered = 0.0;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    const double a = std::max(tr[i - 1].t, t0);
    const double b = std::min(tr[i].t, t1);
    if (b <= a) continue;
    angle += tr[i].omega_h * (b - a);
    covered += b - a;
  }
  if (!(covered > 0.0)) throw InvalidInput("averaging window contains no samples");
  if (covered < 10.0 - 1e-9 && std::abs(angle) < 2.0 * std::numbers::pi)
    throw InvalidInput("averaging window shorter than 10 s and one head revolution");
  return angle / covered;
}

SteadyState steady_state(const Trajectory& tr, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidInput("steady fraction must lie in (0, 1]");
  if (tr.size() < 2) throw InvalidInput("trajectory needs at least two samples");
  SteadyState s;
  const double t_first = tr.front().t;
  const double t_last = tr.back().t;
  s.window_end = t_last;
  s.window_start = t_last - fraction * (t_last - t_first);
  s.path_length = head_path_length(tr);

  std::size_t first = 0;
  while (first < tr.size() && tr[first].t < s.window_start - 1e-12) ++first;
  if (first + 1 >= tr.size()) first = tr.size() - 2;
  const TrajectorySample& a = tr[first];
  const TrajectorySample& b = tr.back();
  const double span = b.t - a.t;

  // Rows carry interval averages, so row i describes (t_{i-1}, t_i].
  double eta_sum = 0.0;
  int eta_count = 0;
  int touching = 0;
  for (std::size_t i = first + 1; i < tr.size(); ++i) {
    const TrajectorySample& r = tr[i];
    const double w = r.t - tr[i - 1].t;
    s.omega_h += r.omega_h * w;
    s.fp_x += r.fp_x * w;
    s.lprime_ratio += r.lprime * w;
    s.contacts += r.contacts * w;
    if (r.contacts > 0) ++touching;
    if (r.eta && std::isfinite(*r.eta)) {
      eta_sum += *r.eta;
      ++eta_count;
    }
    ++s.samples;
  }
  s.omega_h /= span;
  s.fp_x /= span;
  s.contacts /= span;
  const double l0 = tr.front().lprime;
  s.lprime_ratio = l0 > 0.0 ? s.lprime_ratio / span / l0 : 0.0;
  s.contact_fraction = static_cast<double>(touching) / s.samples;
  s.velocity_x = (b.head.x() - a.head.x()) / span;
  s.speed = (b.head - a.head).norm() / span;
  if (eta_count > 0) s.eta = eta_sum / eta_count;
  return s;
}

} // namespace flagsim
