#include "../support/oracles.hpp"

#include "flagsim/contact.hpp"
#include "flagsim/hydrodynamics.hpp"
#include "flagsim/runner.hpp"

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace flagsim;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

// Every simulated case runs 30 s with a 3 s ramp and 0.1 s output frames;
// steady quantities are means over the last third.
constexpr double kDuration = 30.0;
constexpr double kRamp = 3.0;
constexpr double kFrame = 0.1;
constexpr double kSteadyStart = 20.0;
constexpr double kCoarseDt = 2e-4;

struct Case {
  int flagella = 1;
  double lambda_bar = 7.0;
  double omega = 0.0;  // motor rate, rad/s
  double dt = kCoarseDt;

  std::string key() const {
    std::ostringstream s;
    s.precision(12);
    s << flagella << '/' << lambda_bar << '/' << omega << '/' << dt;
    return s.str();
  }
};

struct RunData {
  std::vector<StepRecord> frames;
  double max_penetration = 0.0;
  bool ok = true;
  std::string error;
};

double mean_over(const RunData& r, double t0, const std::function<double(const StepRecord&)>& f) {
  double sum = 0.0;
  int n = 0;
  for (const StepRecord& s : r.frames)
    if (s.time >= t0 - 1e-9) {
      sum += f(s);
      ++n;
    }
  return n ? sum / n : std::nan("");
}

double steady(const RunData& r, const std::function<double(const StepRecord&)>& f) {
  return mean_over(r, kSteadyStart, f);
}

double steady_velocity(const RunData& r) {
  const StepRecord* a = nullptr;
  for (const StepRecord& s : r.frames)
    if (!a && s.time >= kSteadyStart - 1e-9) a = &s;
  const StepRecord& b = r.frames.back();
  return (b.head_centroid.x() - a->head_centroid.x()) / (b.time - a->time);
}

double steady_efficiency(const RunData& r) {
  return steady(r, [](const StepRecord& s) { return s.efficiency.value_or(0.0); });
}

// A frame counts as in contact when a pair touches at the frame or any
// committed step of its interval penetrated.
bool in_contact(const StepRecord& s) { return s.contacts > 0 || s.max_penetration > 0.0; }

class Runs {
public:
  const RunData& get(const Case& c) {
    auto it = cache_.find(c.key());
    if (it != cache_.end()) return it->second;
    RunConfig cfg;
    cfg.flagella_count = c.flagella;
    cfg.pitches.assign(c.flagella, c.lambda_bar * cfg.params.helix_radius);
    cfg.params.time_step = c.dt;
    cfg.motor_omega = c.omega;
    cfg.ramp_time = kRamp;
    RunData d;
    const auto t0 = Clock::now();
    try {
      Simulation sim = make_simulation(cfg);
      sim.run(kDuration, kFrame, [&](const StepRecord& s) { d.frames.push_back(s); });
      d.max_penetration = sim.max_committed_penetration();
    } catch (const std::exception& e) {
      d.ok = false;
      d.error = e.what();
    }
    std::cerr << "  run n=" << c.flagella << " lambda=" << c.lambda_bar
              << " omega_bar=" << fmt(norm_.omega(c.omega)) << " dt=" << c.dt << ": "
              << (d.ok ? "ok" : d.error) << " (" << fmt(elapsed(t0), 3) << " s)" << std::endl;
    return cache_.emplace(c.key(), std::move(d)).first->second;
  }

  double omega_from_bar(double omega_bar) const { return norm_.omega_inverse(omega_bar); }
  double omega_bar(double omega) const { return norm_.omega(omega); }

private:
  Normalization norm_ = Normalization::from(PhysicalParams{});
  std::map<std::string, RunData> cache_;
};

double rpm(double r) { return r * 2.0 * std::numbers::pi / 60.0; }

// ---------------------------------------------------------------------------

Outcome gradient_hessian() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double worst_f = 0.0, worst_k = 0.0;
  for (int i = 0; i < 100; ++i) {
    const oracle::RandomRod r = oracle::random_rod(rng, 10);
    const RobotTopology& topo = r.robot.topology;
    const VecX f = elastic_force(topo, r.dofs, r.frames);
    worst_f = std::max(worst_f,
                       oracle::relative_error(f, oracle::fd_force(topo, r.frames, r.dofs, 1e-8, 1e-6)));
    const MatX k = elastic_jacobian(topo, r.dofs, r.frames).to_dense();
    const MatX kd = oracle::fd_hessian(topo, r.frames, r.dofs, 1e-8, 1e-6);
    worst_k = std::max(worst_k, oracle::relative_error(k.reshaped(), kd.reshaped()));
  }
  const double t = elapsed(t0);
  return {worst_f < 1e-4 && worst_k < 1e-3 && t < 60.0,
          "force rel err " + fmt(worst_f) + ", jacobian rel err " + fmt(worst_k) + ", " +
              fmt(t, 3) + " s"};
}

Outcome rss_kernel() {
  const auto t0 = Clock::now();
  const double eps = PhysicalParams{}.regularization;
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a = random_vec(rng, 5e-3);
    const Vec3 b = a + random_vec(rng, 5e-3);
    Vec3 x;
    switch (i % 4) {
    case 0: x = a + 0.37 * (b - a) + random_vec(rng, 2.0 * eps); break;
    case 1: x = a + random_vec(rng, 1e-2); break;
    case 2: x = a + 0.61 * (b - a); break;
    default: x = b + random_vec(rng, 5.0 * eps); break;
    }
    const auto k = rss_segment_kernels(x, a, b, eps);
    const Mat3 qa = oracle::quadrature_kernel(x, a, b, eps, [](double s) { return 1.0 - s; });
    const Mat3 qb = oracle::quadrature_kernel(x, a, b, eps, [](double s) { return s; });
    worst = std::max({worst, (k[0] - qa).norm() / qa.norm(), (k[1] - qb).norm() / qb.norm()});
  }

  double far = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_vec(rng, 1e-2);
    const Vec3 b = a + eps * random_vec(rng, 1.0).normalized();
    const Vec3 mid = 0.5 * (a + b);
    const Vec3 x = mid + 100.0 * eps * random_vec(rng, 1.0).normalized();
    const Vec3 g = random_vec(rng, 1.0);
    const Vec3 u = rss_segment_velocity(x, a, b, g, eps, 1.0);
    const Vec3 ref = oracle::stokeslet(x - mid) * (g * eps) / (8.0 * std::numbers::pi);
    far = std::max(far, (u - ref).norm() / ref.norm());
  }
  const double t = elapsed(t0);
  return {worst < 1e-6 && far < 1e-2 && t < 60.0,
          "quadrature rel err " + fmt(worst) + ", far-field rel err " + fmt(far) + ", " +
              fmt(t, 3) + " s"};
}

Outcome mobility() {
  PhysicalParams p;
  const double pitch[2] = {p.pitch, p.pitch};
  const Robot r = assemble_robot(p, pitch, 2);
  const MobilityMatrix m = assemble_mobility(r.topology, r.dofs, p.regularization, p.viscosity);
  const double asym = (m.matrix - m.matrix.transpose()).cwiseAbs().maxCoeff();
  const Eigen::LLT<MatX> llt(m.matrix);
  const double min_ev = Eigen::SelfAdjointEigenSolver<MatX>(m.matrix).eigenvalues().minCoeff();

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  int positive = 0;
  double least = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    VecX v = VecX::Zero(r.dofs.size());
    for (int n : m.nodes)
      for (int c = 0; c < 3; ++c) v[DofVector::node_index(n) + c] = 1e-3 * nd(rng);
    const VecX f = drag_forces(m, v);
    const double power = -f.dot(v);
    least = std::min(least, power);
    if (power > 0.0) ++positive;
  }
  const bool pass = asym == 0.0 && llt.info() == Eigen::Success && positive == 100;
  return {pass, "asymmetry " + fmt(asym) + ", Cholesky " +
                    (llt.info() == Eigen::Success ? "ok" : "failed") + ", min eigenvalue " +
                    fmt(min_ev) + ", dissipation > 0 in " + std::to_string(positive) +
                    "/100 (min " + fmt(least) + " W)"};
}

Outcome contact(Runs& runs) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  double worst = 0.0;
  bool below_grid = true;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p0 = random_vec(rng, 5e-3), p1 = p0 + random_vec(rng, 5e-3);
    const Vec3 q0 = random_vec(rng, 5e-3), q1 = q0 + random_vec(rng, 5e-3);
    const double d = min_distance(p0, p1, q0, q1).distance;
    const double g = oracle::grid_distance(p0, p1, q0, q1, 2001);
    worst = std::max(worst, std::abs(g - d));
    below_grid = below_grid && d <= g + 1e-15;
  }
  const double grid_time = elapsed(t0);

  const double r0 = PhysicalParams{}.rod_radius;
  const RunData& run = runs.get({2, 5.0, rpm(60), kCoarseDt});
  const double pen = run.max_penetration / r0;
  int contact_frames = 0;
  for (const StepRecord& s : run.frames) contact_frames += in_contact(s) ? 1 : 0;
  const bool pass = worst < 1e-6 && below_grid && run.ok && pen < 0.05;
  return {pass, "grid max diff " + fmt(worst) + " m (" + fmt(grid_time, 3) +
                    " s); 60 rpm lambda 5 run " + (run.ok ? "completed" : "failed: " + run.error) +
                    ", max penetration " + fmt(pen) + " r0, contact in " +
                    std::to_string(contact_frames) + "/" + std::to_string(run.frames.size()) +
                    " frames"};
}

// Single-flagellum sweep over omega_bar; stops after the first buckled point
// unless `full`.
struct SweepResult {
  std::vector<double> omega_bar;
  std::vector<double> min_length_ratio;
  std::vector<double> efficiency;
  std::optional<double> threshold;
  std::string error;
};

std::vector<double> sweep_grid() {
  std::vector<double> g;
  for (double w = 50.0; w <= 600.0 + 1e-9; w += 50.0) g.push_back(w);
  return g;
}

SweepResult buckling_sweep(Runs& runs, double lambda_bar, bool full) {
  SweepResult out;
  for (double wb : sweep_grid()) {
    const RunData& r = runs.get({1, lambda_bar, runs.omega_from_bar(wb), kCoarseDt});
    if (!r.ok) {
      out.error = "omega_bar " + fmt(wb) + ": " + r.error;
      break;
    }
    const double l0 = r.frames.front().apparent_length;
    double lmin = 1.0;
    for (const StepRecord& s : r.frames) lmin = std::min(lmin, s.apparent_length / l0);
    out.omega_bar.push_back(wb);
    out.min_length_ratio.push_back(lmin);
    out.efficiency.push_back(steady_efficiency(r));
    if (lmin < 0.9 && !out.threshold) {
      out.threshold = wb;
      if (!full) break;
    }
  }
  return out;
}

std::string describe(const SweepResult& s) {
  std::string d;
  for (std::size_t i = 0; i < s.omega_bar.size(); ++i)
    d += (i ? " " : "") + fmt(s.omega_bar[i]) + ":" + fmt(s.min_length_ratio[i], 3);
  return d;
}

Outcome buckling(Runs& runs) {
  struct Target {
    double lambda_bar;
    std::optional<double> expected;
  };
  const Target targets[] = {{5.0, 230.0}, {7.0, 363.0}, {9.0, std::nullopt}};
  bool pass = true;
  std::string detail;
  for (const Target& t : targets) {
    const SweepResult s = buckling_sweep(runs, t.lambda_bar, !t.expected);
    detail += (detail.empty() ? "" : "; ") + std::string("lambda ") + fmt(t.lambda_bar) + ": ";
    if (!s.error.empty()) {
      pass = false;
      detail += "run failed (" + s.error + ")";
      continue;
    }
    if (t.expected) {
      const bool ok = s.threshold && std::abs(*s.threshold - *t.expected) <= 0.15 * *t.expected;
      pass = pass && ok;
      detail += "threshold " + (s.threshold ? fmt(*s.threshold) : std::string("none")) +
                " (expected " + fmt(*t.expected) + ")";
    } else {
      pass = pass && !s.threshold;
      detail += s.threshold ? "buckles at " + fmt(*s.threshold) : std::string("no buckling");
    }
    detail += " [min L'/L0 " + describe(s) + "]";
  }
  return {pass, detail};
}

Outcome bundling(Runs& runs) {
  struct Stats {
    int contact_frames = 0;
    double window_fraction = 0.0;  // 1 s windows after 10 s containing contact
    double separation = 0.0;
  };
  auto stats = [](const RunData& r) {
    Stats s;
    std::vector<bool> windows(20, false);
    int n = 0;
    for (const StepRecord& f : r.frames) {
      if (in_contact(f)) ++s.contact_frames;
      if (f.time < 10.0 + 1e-9) continue;
      const int w = std::min(19, static_cast<int>((f.time - 10.0 - 1e-9) / 1.0));
      if (in_contact(f)) windows[w] = true;
      s.separation += f.flagella_separation;
      ++n;
    }
    s.window_fraction = std::count(windows.begin(), windows.end(), true) / 20.0;
    s.separation /= n;
    return s;
  };
  const RunData& tight = runs.get({2, 5.0, rpm(60), kCoarseDt});
  const RunData& loose = runs.get({2, 9.0, rpm(60), kCoarseDt});
  if (!tight.ok || !loose.ok) return {false, "run failed: " + tight.error + loose.error};
  const Stats a = stats(tight), b = stats(loose);
  const bool bundle5 = a.window_fraction >= 0.95;
  const bool partial9 = b.contact_frames > 0 && b.window_fraction < 0.95;
  return {bundle5 && partial9,
          "lambda 5: contact in " + fmt(100.0 * a.window_fraction, 3) +
              "% of 1 s windows after 10 s, " + std::to_string(a.contact_frames) +
              " contact frames, mean separation " + fmt(a.separation) + " m; lambda 9: contact in " +
              fmt(100.0 * b.window_fraction, 3) + "% of windows, " +
              std::to_string(b.contact_frames) + " contact frames, mean separation " +
              fmt(b.separation) + " m"};
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  return cov * cov / (vx * vy);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

const double kLowRpm[] = {30, 40, 50, 60, 70};
const double kHighOmegaBar[] = {100, 150, 200, 250};

Outcome head_rotation(Runs& runs) {
  std::vector<double> w_low, wh_low, v_low;
  std::vector<double> wb_high, slope_high;
  bool opposite = true;
  std::string detail;
  auto take = [&](double omega) -> const RunData* {
    const RunData& r = runs.get({2, 7.0, omega, kCoarseDt});
    if (!r.ok) return nullptr;
    const double wh = steady(r, [](const StepRecord& s) { return s.omega_h; });
    const double wt = steady(r, [](const StepRecord& s) { return s.omega_t; });
    opposite = opposite && wh * wt < 0.0;
    return &r;
  };
  for (double rate : kLowRpm) {
    const RunData* r = take(rpm(rate));
    if (!r) return {false, "run failed at " + fmt(rate) + " rpm"};
    w_low.push_back(rpm(rate));
    wh_low.push_back(std::abs(steady(*r, [](const StepRecord& s) { return s.omega_h; })));
    v_low.push_back(steady_velocity(*r));
  }
  for (double wb : kHighOmegaBar) {
    const RunData* r = take(runs.omega_from_bar(wb));
    if (!r) return {false, "run failed at omega_bar " + fmt(wb)};
    wb_high.push_back(wb);
    slope_high.push_back(std::abs(steady(*r, [](const StepRecord& s) { return s.omega_h; })) /
                         runs.omega_from_bar(wb));
  }
  const double r2 = r_squared(w_low, wh_low);
  bool decreasing = true;
  for (std::size_t i = 1; i < slope_high.size(); ++i)
    decreasing = decreasing && slope_high[i] < slope_high[i - 1];
  const bool forward = std::all_of(v_low.begin(), v_low.end(), [](double v) { return v > 0.0; });
  const double exponent = forward ? loglog_slope(w_low, v_low) : std::nan("");
  detail = std::string("counter-rotation ") + (opposite ? "in all runs" : "violated") +
           ", R^2 " + fmt(r2) + ", omega_h/omega_T at omega_bar";
  for (std::size_t i = 0; i < wb_high.size(); ++i)
    detail += " " + fmt(wb_high[i]) + ":" + fmt(slope_high[i], 3);
  detail += ", velocity exponent " + fmt(exponent, 3) + " (v:";
  for (double v : v_low) detail += " " + fmt(v, 3);
  detail += " m/s)";
  return {opposite && r2 > 0.95 && decreasing && forward && exponent > 1.0, detail};
}

Outcome time_step(Runs& runs) {
  const RunData& coarse = runs.get({2, 7.0, rpm(60), kCoarseDt});
  const RunData& fine = runs.get({2, 7.0, rpm(60), 0.5 * kCoarseDt});
  if (!coarse.ok || !fine.ok) return {false, "run failed: " + coarse.error + fine.error};
  double path = 0.0, deviation = 0.0;
  const std::size_t n = std::min(coarse.frames.size(), fine.frames.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0)
      path += (fine.frames[i].head_centroid - fine.frames[i - 1].head_centroid).norm();
    deviation = std::max(deviation,
                         (coarse.frames[i].head_centroid - fine.frames[i].head_centroid).norm());
  }
  return {n == fine.frames.size() && deviation < 0.02 * path,
          "max head-centroid deviation " + fmt(deviation) + " m over path " + fmt(path) +
              " m (" + fmt(100.0 * deviation / path, 3) + "%)"};
}

Outcome efficiency_order(Runs& runs) {
  const double w100 = runs.omega_from_bar(100.0);
  const RunData& single = runs.get({1, 7.0, w100, kCoarseDt});
  const RunData& multi = runs.get({2, 7.0, w100, kCoarseDt});
  if (!single.ok || !multi.ok) return {false, "run failed: " + single.error + multi.error};
  const double es = steady_efficiency(single), em = steady_efficiency(multi);
  bool flat = true;
  std::string detail = "eta single " + fmt(es) + " vs multi " + fmt(em) + " at omega_bar 100";
  for (double lambda_bar : {5.0, 7.0, 9.0}) {
    const SweepResult s = buckling_sweep(runs, lambda_bar, lambda_bar == 9.0);
    std::vector<double> pre;
    for (std::size_t i = 0; i < s.omega_bar.size(); ++i)
      if (!s.threshold || s.omega_bar[i] < *s.threshold) pre.push_back(s.efficiency[i]);
    if (pre.size() < 2 || !s.error.empty()) {
      flat = false;
      detail += "; lambda " + fmt(lambda_bar) + ": too few pre-buckling points";
      continue;
    }
    const auto [lo, hi] = std::minmax_element(pre.begin(), pre.end());
    double mean = 0.0;
    for (double e : pre) mean += e;
    mean /= static_cast<double>(pre.size());
    const double variation = (*hi - *lo) / mean;
    flat = flat && variation < 0.2;
    detail += "; lambda " + fmt(lambda_bar) + " pre-buckling eta " + fmt(*lo, 3) + ".." +
              fmt(*hi, 3) + " over " + std::to_string(pre.size()) + " points (variation " +
              fmt(100.0 * variation, 3) + "%)";
  }
  return {es > em && flat, detail};
}

Outcome propulsive_force(Runs& runs) {
  bool pass = true;
  std::string detail = "F_p [N] (per flagellum):";
  for (double rate : kLowRpm) {
    const RunData& r = runs.get({2, 7.0, rpm(rate), kCoarseDt});
    if (!r.ok) return {false, "run failed at " + fmt(rate) + " rpm"};
    const double fp = steady(r, [](const StepRecord& s) { return s.propulsive_force; });
    pass = pass && fp >= 2e-4 && fp <= 2e-2;
    detail += " " + fmt(rate) + " rpm " + fmt(fp, 3) + " (" + fmt(0.5 * fp, 3) + ")";
  }
  return {pass, detail};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  bool strict = false;
  app.add_option("criteria", only, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 10));
  app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  Runs runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient and Hessian vs finite differences", gradient_hessian},
      {"RSS kernel vs quadrature and Stokeslet", rss_kernel},
      {"mobility symmetric positive definite", mobility},
      {"segment distance and penetration bound", [&] { return contact(runs); }},
      {"buckling thresholds", [&] { return buckling(runs); }},
      {"bundling vs pitch", [&] { return bundling(runs); }},
      {"head counter-rotation and trends", [&] { return head_rotation(runs); }},
      {"time-step convergence", [&] { return time_step(runs); }},
      {"efficiency ordering", [&] { return efficiency_order(runs); }},
      {"propulsive force magnitude", [&] { return propulsive_force(runs); }},
  };

  int evaluated = 0, failed = 0, errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    std::cerr << "criterion " << id << ": " << criteria[i].first << std::endl;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
      ++errors;
    }
    ++evaluated;
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << " [" << fmt(elapsed(t0), 4) << " s]" << std::endl;
  }
  std::cout << failed << " of " << evaluated << " criteria failed" << std::endl;
  return errors > 0 || (strict && failed > 0) ? 1 : 0;
}
