#include "flagsim/stepper.hpp"

#include "flagsim/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace flagsim {

double ActuationSchedule::omega(double t) const {
  if (t <= 0.0) return 0.0;
  if (ramp_time <= 0.0 || t >= ramp_time) return omega_target;
  return omega_target * t / ramp_time;
}

namespace {

struct ContactColumns {
  VecX forces;
  MatX u;  // columns sqrt(k) * dp/dq for the pairs that currently overlap
};

ContactColumns contact_terms(const DofVector& dofs, const std::vector<std::array<int, 2>>& pairs,
                             double stiffness, double rod_radius, bool with_columns) {
  ContactColumns out;
  out.forces = VecX::Zero(dofs.size());
  std::vector<VecX> cols;
  const double root_k = std::sqrt(std::max(stiffness, 0.0));
  for (const auto& pr : pairs) {
    const ContactPair cp = evaluate_pair(dofs, pr[0], pr[1], rod_radius);
    if (cp.penetration <= 0.0) continue;
    const std::array<Vec3, 4> f = penalty_response(cp, stiffness);
    const std::array<int, 4> nodes{cp.l, cp.l + 1, cp.m, cp.m + 1};
    for (int i = 0; i < 4; ++i) out.forces.segment<3>(DofVector::node_index(nodes[i])) += f[i];
    if (!with_columns) continue;
    const std::array<double, 4> w{1.0 - cp.s, cp.s, -(1.0 - cp.t), -cp.t};
    VecX c = VecX::Zero(dofs.size());
    for (int i = 0; i < 4; ++i)
      c.segment<3>(DofVector::node_index(nodes[i])) += root_k * w[i] * cp.normal;
    cols.push_back(std::move(c));
  }
  if (with_columns) {
    out.u.resize(dofs.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) out.u.col(static_cast<Eigen::Index>(i)) = cols[i];
  }
  return out;
}

// Residual with the inertial term built from the displacement d = q - q_old,
// which keeps it free of the cancellation in q - q_old.
VecX assemble(const StepProblem& pb, const VecX& d, const DofVector& q, const FrameSet& frames,
              BandMatrix* jac, MatX* columns) {
  const Eigen::Index n = q.size();
  VecX grad(n);
  elastic_gradient_hessian(*pb.topology, q, frames, grad, jac);
  const double inv_dt2 = 1.0 / (pb.dt * pb.dt);
  VecX f = pb.masses->cwiseProduct(d - pb.dt * *pb.v_old) * inv_dt2 + grad - pb.f_ext;
  if (!pb.contacts.empty()) {
    ContactColumns cc =
        contact_terms(q, pb.contacts, pb.contact_stiffness, pb.rod_radius, columns != nullptr);
    f -= cc.forces;
    if (columns) *columns = std::move(cc.u);
  } else if (columns) {
    columns->resize(n, 0);
  }
  if (jac) jac->add_diagonal(*pb.masses * inv_dt2);
  return f;
}

void check_problem(const StepProblem& pb) {
  if (!pb.topology || !pb.masses || !pb.q_old || !pb.v_old || !pb.frames_old)
    throw InvalidInput("step problem is incomplete");
  if (!(pb.dt > 0.0)) throw InvalidInput("time step must be positive");
  const Eigen::Index n = pb.topology->dof_count();
  if (pb.masses->size() != n || pb.q_old->size() != n || pb.v_old->size() != n ||
      pb.f_ext.size() != n)
    throw InvalidInput("step problem vectors do not match the topology");
}

} // namespace

VecX contact_forces(const DofVector& dofs, const std::vector<std::array<int, 2>>& pairs,
                    double stiffness, double rod_radius) {
  return contact_terms(dofs, pairs, stiffness, rod_radius, false).forces;
}

VecX residual(const StepProblem& problem, const DofVector& q_new, const FrameSet& frames_new) {
  check_problem(problem);
  const VecX d = q_new.values() - problem.q_old->values();
  return assemble(problem, d, q_new, frames_new, nullptr, nullptr);
}

NewtonResult newton_solve(const StepProblem& problem, const DofVector& guess, double tol,
                          int max_iter) {
  check_problem(problem);
  if (!(tol > 0.0)) throw InvalidInput("newton tolerance must be positive");
  const VecX& q0 = problem.q_old->values();
  const Eigen::Index n = q0.size();
  VecX d = guess.values() - q0;
  BandMatrix jac(n, kElasticHalfBandwidth);
  MatX cols;
  NewtonResult res;
  double previous = std::numeric_limits<double>::infinity();

  for (int it = 0;; ++it) {
    DofVector q(VecX(q0 + d));
    FrameSet frames = time_update_frames(*problem.frames_old, *problem.q_old, q);
    jac.set_zero();
    const VecX f = assemble(problem, d, q, frames, &jac, &cols);
    const double norm = f.lpNorm<1>();
    res.residual_history.push_back(norm);
    res.residual = norm;
    res.iterations = it;
    if (!std::isfinite(norm)) return res;
    // Below 100 tol a residual that no longer halves is at the roundoff floor.
    const bool floor = it > 0 && norm < 1e2 * tol && norm > 0.5 * previous;
    if (norm < tol || floor) {
      res.converged = true;
      res.dofs = std::move(q);
      res.frames = std::move(frames);
      return res;
    }
    if (it >= max_iter) return res;
    previous = norm;

    const Eigen::Index k = cols.cols();
    MatX rhs(n, 1 + k);
    rhs.col(0) = f;
    if (k > 0) rhs.rightCols(k) = cols;
    if (!jac.solve_in_place(rhs)) return res;
    VecX delta = rhs.col(0);
    if (k > 0) {
      const MatX binv_u = rhs.rightCols(k);
      const MatX cap = MatX::Identity(k, k) + cols.transpose() * binv_u;
      delta -= binv_u * cap.ldlt().solve(cols.transpose() * delta);
    }
    d -= delta;
  }
}

Simulation::Simulation(Robot robot, PhysicalParams params, ActuationSchedule schedule,
                       SolverOptions options)
    : topology_(std::move(robot.topology)), params_(params), schedule_(schedule),
      options_(options) {
  params_.validate();
  if (robot.dofs.size() != topology_.dof_count())
    throw InvalidInput("DOF vector does not match the topology");
  if (options_.max_halvings < 0 || options_.max_halvings > 20)
    throw InvalidInput("max_halvings must be in [0, 20]");
  if (options_.max_newton_iter < 1) throw InvalidInput("max_newton_iter must be positive");
  if (schedule_.ramp_time < 0.0) throw InvalidInput("ramp_time must be non-negative");

  dt_nominal_ = dt_ = params_.time_step;
  tol_ = options_.newton_tol > 0.0 ? options_.newton_tol
                                   : 1e-6 * params_.stretch_stiffness() * dt_nominal_;
  contact_stiffness_ = options_.contact_stiffness > 0.0
                           ? options_.contact_stiffness
                           : 0.01 * params_.stretch_stiffness() / params_.rod_radius;

  for (int i = 0; i < 2; ++i) {
    const int m = topology_.motor_nodes[i];
    if (m < 0) continue;
    if (options_.actuation == ActuationMode::StiffMotor)
      topology_.twist_stiffness[m] *= options_.stiff_motor_factor;
    base_rest_twist_[i] = topology_.rest.twist[m];
  }

  state_.dofs = std::move(robot.dofs);
  state_.velocity = VecX::Zero(state_.dofs.size());
  state_.frames = init_reference_frames(state_.dofs);
  state_.masses = lumped_masses(topology_, params_);
}

long long Simulation::tick_span(int halvings) const {
  return 1LL << (options_.max_halvings - halvings);
}

void Simulation::reset_accumulator() { acc_ = Accumulator{}; }

double Simulation::flagellum_spin(const VecX& velocity, const Vec3& axis) const {
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < 2; ++i) {
    const int m = topology_.motor_nodes[i];
    if (m < 0) continue;
    // Stem edge on the flagellum side of the motor node.
    const int e = i == 0 ? m - 1 : m;
    if (e < 0 || e >= topology_.edge_count()) continue;
    const double orient = state_.frames.tangent[e].dot(axis) >= 0.0 ? 1.0 : -1.0;
    sum += orient * velocity[DofVector::twist_index(e)];
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

void Simulation::advance(double dt) {
  const DofVector& q_old = state_.dofs;
  const VecX& v_old = state_.velocity;

  const double w = schedule_.omega(state_.time);
  std::array<double, 2> twist = state_.motor_twist;
  for (int i = 0; i < 2; ++i) {
    const int m = topology_.motor_nodes[i];
    if (m < 0) continue;
    twist[i] += schedule_.direction[i] * w * dt;
    topology_.rest.twist[m] = base_rest_twist_[i] + twist[i];
  }

  StepProblem pb;
  pb.topology = &topology_;
  pb.masses = &state_.masses;
  pb.q_old = &q_old;
  pb.v_old = &v_old;
  pb.frames_old = &state_.frames;
  pb.dt = dt;
  pb.f_ext = VecX::Zero(q_old.size());
  pb.contact_stiffness = contact_stiffness_;
  pb.rod_radius = params_.rod_radius;

  HeadDrag hd;
  if (options_.hydrodynamics) {
    const MobilityMatrix mob =
        assemble_mobility(topology_, q_old, params_.regularization, params_.viscosity);
    pb.f_ext += drag_forces(mob, v_old);
    const HeadMotion hm = head_motion(topology_, q_old, v_old);
    hd = head_drag(hm.velocity, hm.spin, params_);
    apply_head_drag(topology_, q_old, hm, hd, pb.f_ext);
  }
  if (options_.contact)
    for (const ContactPair& c : active_) pb.contacts.push_back({c.l, c.m});

  DofVector guess(VecX(q_old.values() + dt * v_old));
  NewtonResult nr;
  long long iterations = 0;
  for (int round = 0;; ++round) {
    nr = newton_solve(pb, guess, tol_, options_.max_newton_iter);
    iterations += nr.iterations;
    if (!nr.converged) {
      std::ostringstream msg;
      msg << "Newton iteration did not converge at t=" << state_.time << " with dt=" << dt
          << " (residual " << nr.residual << ", tolerance " << tol_ << ")";
      throw SolverFailure(msg.str());
    }
    if (!options_.contact) break;
    bool added = false;
    for (const ContactPair& c : detect_all(topology_, nr.dofs, params_.rod_radius)) {
      const std::array<int, 2> key{c.l, c.m};
      if (std::find(pb.contacts.begin(), pb.contacts.end(), key) == pb.contacts.end()) {
        pb.contacts.push_back(key);
        added = true;
      }
    }
    if (!added) break;
    if (round + 1 > options_.max_contact_resolves) {
      std::ostringstream msg;
      msg << "contact loop did not settle after " << options_.max_contact_resolves
          << " re-solves at t=" << state_.time;
      throw SolverFailure(msg.str());
    }
    guess = nr.dofs;
  }

  VecX v_new = (nr.dofs.values() - q_old.values()) / dt;
  if (!v_new.allFinite()) throw SolverFailure("non-finite velocity");

  // Pairs near contact stay active for the next step's first solve.
  std::vector<ContactPair> keep;
  int touching = 0;
  double penetration = 0.0;
  for (const auto& key : pb.contacts) {
    const ContactPair c = evaluate_pair(nr.dofs, key[0], key[1], params_.rod_radius);
    if (c.distance < 2.5 * params_.rod_radius) keep.push_back(c);
    if (c.penetration > 0.0) {
      ++touching;
      penetration = std::max(penetration, c.penetration);
    }
  }
  std::sort(keep.begin(), keep.end(), [](const ContactPair& a, const ContactPair& b) {
    return a.l != b.l ? a.l < b.l : a.m < b.m;
  });

  state_.dofs = std::move(nr.dofs);
  state_.frames = std::move(nr.frames);
  state_.velocity = std::move(v_new);
  state_.motor_twist = twist;
  active_ = std::move(keep);
  last_contacts_ = touching;
  max_penetration_ = std::max(max_penetration_, penetration);

  const HeadMotion hm_new = head_motion(topology_, state_.dofs, state_.velocity);
  acc_.duration += dt;
  acc_.head_angle += hm_new.spin * dt;
  acc_.flagellum_angle += flagellum_spin(state_.velocity, hm_new.axis) * dt;
  acc_.head_force += hd.force * dt;
  acc_.head_torque += hd.torque * dt;
  acc_.max_penetration = std::max(acc_.max_penetration, penetration);
  acc_.steps += 1;
  acc_.newton_iterations += iterations;
}

void Simulation::step() {
  for (;;) {
    try {
      advance(dt_);
      break;
    } catch (const SolverFailure& e) {
      if (halvings_ >= options_.max_halvings) throw;
    } catch (const InvalidInput& e) {
      // Degenerate geometry reached during the iteration.
      if (halvings_ >= options_.max_halvings) throw SolverFailure(e.what());
    }
    ++halvings_;
    dt_ *= 0.5;
    since_halving_ = 0;
  }
  ticks_ += tick_span(halvings_);
  state_.time = static_cast<double>(ticks_) * dt_nominal_ / static_cast<double>(tick_span(0));
  ++steps_;
  if (halvings_ > 0 && ++since_halving_ >= options_.restore_after &&
      ticks_ % tick_span(0) == 0) {
    halvings_ = 0;
    dt_ = dt_nominal_;
    since_halving_ = 0;
  }
}

void Simulation::run(double t_end, double output_interval,
                     const std::function<void(const StepRecord&)>& sink) {
  if (!(output_interval > 0.0)) throw InvalidInput("output_interval must be positive");
  if (t_end < 0.0) throw InvalidInput("total_time must be non-negative");
  if (t_end == 0.0) return;
  const long long span = tick_span(0);
  const double per_step = output_interval / dt_nominal_;
  const long long out_steps = std::llround(per_step);
  if (out_steps < 1 || std::abs(per_step - static_cast<double>(out_steps)) > 1e-6 * per_step)
    throw InvalidInput("output_interval must be a multiple of time_step");
  const long long end_ticks =
      ticks_ + static_cast<long long>(std::ceil(t_end / dt_nominal_ - 1e-9)) * span;

  reset_accumulator();
  if (sink) sink(snapshot());
  long long next_out = ticks_ + out_steps * span;
  while (ticks_ < end_ticks) {
    step();
    if (ticks_ >= next_out || ticks_ >= end_ticks) {
      if (sink) sink(snapshot());
      reset_accumulator();
      next_out += out_steps * span;
    }
  }
}

StepRecord Simulation::snapshot() const {
  StepRecord r;
  r.time = state_.time;
  const HeadMotion hm = head_motion(topology_, state_.dofs, state_.velocity);
  r.head_centroid = hm.centroid;
  r.head_axis = hm.axis;
  r.omega_motor = schedule_.omega(state_.time);
  if (acc_.duration > 0.0) {
    r.omega_h = acc_.head_angle / acc_.duration;
    r.omega_t = acc_.flagellum_angle / acc_.duration;
    r.head_force = acc_.head_force / acc_.duration;
    r.head_torque = acc_.head_torque / acc_.duration;
    r.newton_iterations =
        static_cast<double>(acc_.newton_iterations) / static_cast<double>(acc_.steps);
  }
  r.propulsive_force = -r.head_force.x();
  if (std::abs(r.head_torque) > 1e-15)
    r.efficiency = r.propulsive_force * params_.head_radius / std::abs(r.head_torque);

  const Vec3 xh = state_.dofs.node(topology_.head_center());
  double lsum = 0.0;
  int nf = 0;
  for (int i = 0; i < 2; ++i) {
    if (topology_.tip_nodes[i] < 0) continue;
    r.tips[i] = state_.dofs.node(topology_.tip_nodes[i]);
    lsum += (r.tips[i] - xh).norm();
    ++nf;
  }
  r.apparent_length = nf > 0 ? lsum / nf : 0.0;

  if (topology_.flagella_count == 2) {
    std::array<Vec3, 2> centroid{Vec3::Zero(), Vec3::Zero()};
    std::array<int, 2> count{0, 0};
    for (int e = 0; e < topology_.edge_count(); ++e) {
      const int f = topology_.edge_flagellum[e];
      if (f < 0) continue;
      centroid[f] += state_.dofs.node(e + 1);
      ++count[f];
    }
    if (count[0] > 0 && count[1] > 0)
      r.flagella_separation = (centroid[0] / count[0] - centroid[1] / count[1]).norm();
  }
  r.contacts = last_contacts_;
  r.max_penetration = acc_.max_penetration;
  r.dt = dt_;
  return r;
}

} // namespace flagsim
