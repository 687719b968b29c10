#include "flagsim/runner.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <system_error>

#ifndef FLAGSIM_VERSION
#define FLAGSIM_VERSION "0.0.0"
#endif

namespace flagsim {

namespace fs = std::filesystem;

namespace {

std::string g10(double x) {
  if (std::isnan(x)) return "nan";
  if (x == 0.0) x = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_field(std::string_view s, int line) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidInput("trajectory line " + std::to_string(line) + ": bad number '" +
                       std::string(s) + "'");
  return v;
}

std::string meta_text(const RunConfig& config, const std::string& status) {
  return "# flagsim " + std::string(software_version()) + "\n# status = " + status + "\n" +
         format_config(config);
}

std::string failure_dump(const Simulation& sim, const std::string& message) {
  std::string out = "# " + message + "\n# t = " + g10(sim.state().time) + "\nnode,x,y,z,theta\n";
  const DofVector& q = sim.state().dofs;
  for (int k = 0; k < q.node_count(); ++k) {
    const Vec3 x = q.node(k);
    out += std::to_string(k) + "," + g10(x.x()) + "," + g10(x.y()) + "," + g10(x.z()) + "," +
           (k < q.edge_count() ? g10(q.theta(k)) : std::string("nan")) + "\n";
  }
  return out;
}

std::string metrics_header() {
  return "t_start,t_end,samples,omega_T,omega_bar_T,lambda_bar,omega_h,omega_h_bar,velocity_x,"
         "velocity_bar,speed,Fp_x,Fp_bar,Lprime_ratio,contacts,contact_fraction,eta,path_length";
}

std::string metrics_fields(const Trajectory& tr, const RunConfig& config) {
  const SteadyState s = steady_state(tr, config.steady_fraction);
  const Normalization n = Normalization::from(config.params, config.normalization_length);
  const double w = config.motor_omega;
  const double v_bar = w > 0.0 ? s.velocity_x * 2.0 * std::numbers::pi / (n.length * w)
                               : std::nan("");
  const std::vector<double> pitches = config.resolved_pitches();
  const double fields[] = {s.window_start,
                           s.window_end,
                           static_cast<double>(s.samples),
                           w,
                           n.omega(w),
                           normalized_pitch(pitches.front(), config.params.helix_radius),
                           s.omega_h,
                           n.omega(s.omega_h),
                           s.velocity_x,
                           v_bar,
                           s.speed,
                           s.fp_x,
                           n.force(s.fp_x),
                           s.lprime_ratio,
                           s.contacts,
                           s.contact_fraction,
                           s.eta ? *s.eta : std::nan(""),
                           s.path_length};
  std::string out;
  for (double f : fields) out += (out.empty() ? "" : ",") + g10(f);
  return out;
}

} // namespace

const char* software_version() { return FLAGSIM_VERSION; }

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string trajectory_header() { return "t,x_h,y_h,z_h,omega_h,Fp_x,Lprime,contacts,eta\n"; }

std::string format_trajectory_row(const StepRecord& r) {
  std::string s;
  s += g10(r.time) + "," + g10(r.head_centroid.x()) + "," + g10(r.head_centroid.y()) + "," +
       g10(r.head_centroid.z()) + "," + g10(r.omega_h) + "," + g10(r.propulsive_force) + "," +
       g10(r.apparent_length) + "," + std::to_string(r.contacts) + "," +
       (r.efficiency ? g10(*r.efficiency) : std::string("nan")) + "\n";
  return s;
}

Trajectory parse_trajectory(std::string_view csv) {
  Trajectory out;
  int line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < csv.size()) {
    const auto nl = csv.find('\n', pos);
    std::string_view line = csv.substr(pos, nl == std::string_view::npos ? csv.npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      std::string h = trajectory_header();
      h.pop_back();
      if (line != h) throw InvalidInput("unexpected trajectory header");
      header = false;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t p = 0;
    while (true) {
      const auto c = line.find(',', p);
      f.push_back(line.substr(p, c == std::string_view::npos ? line.npos : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    if (f.size() != 9)
      throw InvalidInput("trajectory line " + std::to_string(line_no) + ": expected 9 fields");
    TrajectorySample s;
    s.t = parse_field(f[0], line_no);
    s.head = Vec3(parse_field(f[1], line_no), parse_field(f[2], line_no), parse_field(f[3], line_no));
    s.omega_h = parse_field(f[4], line_no);
    s.fp_x = parse_field(f[5], line_no);
    s.lprime = parse_field(f[6], line_no);
    s.contacts = static_cast<int>(parse_field(f[7], line_no));
    const double eta = parse_field(f[8], line_no);
    if (!std::isnan(eta)) s.eta = eta;
    out.push_back(s);
  }
  if (header) throw InvalidInput("trajectory file is empty");
  return out;
}

Trajectory read_trajectory(const fs::path& path) { return parse_trajectory(read_file(path)); }

Simulation make_simulation(const RunConfig& config) {
  config.validate();
  const std::vector<double> pitches = config.resolved_pitches();
  Robot robot = assemble_robot(config.params, pitches, config.flagella_count, config.handedness);
  return Simulation(std::move(robot), config.params, config.schedule(), config.solver);
}

RunOutcome run_simulation(const RunConfig& config, const fs::path& directory, std::ostream* log) {
  Simulation sim = make_simulation(config);
  RunOutcome outcome;
  outcome.directory = directory;
  fs::create_directories(directory);

  std::string csv = trajectory_header();
  double next_report = 0.0;
  const double report_every = std::max(config.total_time / 10.0, config.output_interval);
  auto sink = [&](const StepRecord& r) {
    csv += format_trajectory_row(r);
    if (log && r.time >= next_report - 1e-12) {
      *log << config.label << ": t=" << g10(r.time) << " s  x_h=" << g10(r.head_centroid.x())
           << "  L'=" << g10(r.apparent_length) << "  contacts=" << r.contacts << "\n";
      next_report += report_every;
    }
  };
  try {
    sim.run(config.total_time, config.output_interval, sink);
  } catch (const SolverFailure& e) {
    const std::string msg = e.what();
    write_file_atomic(directory / "trajectory.csv", csv);
    write_file_atomic(directory / "failure_state.csv", failure_dump(sim, msg));
    write_file_atomic(directory / "run_meta.cfg", meta_text(config, "failed: " + msg));
    throw;
  }
  write_file_atomic(directory / "trajectory.csv", csv);
  write_file_atomic(directory / "run_meta.cfg", meta_text(config, "ok"));
  outcome.ok = true;
  outcome.message = "ok";
  outcome.steps = sim.steps_taken();
  return outcome;
}

std::string read_run_status(const fs::path& run_meta) {
  const std::string text = read_file(run_meta);
  const std::string tag = "# status = ";
  const auto p = text.find(tag);
  if (p == std::string::npos) return "unknown";
  const auto e = text.find('\n', p);
  return text.substr(p + tag.size(), e == std::string::npos ? std::string::npos : e - p - tag.size());
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "rpm") return SweepAxis::Rpm;
  if (name == "pitch") return SweepAxis::Pitch;
  if (name == "flagella_count") return SweepAxis::FlagellaCount;
  throw ConfigError("axis", 0, "expected rpm, pitch or flagella_count");
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
  case SweepAxis::Rpm: return "rpm";
  case SweepAxis::Pitch: return "pitch";
  case SweepAxis::FlagellaCount: return "flagella_count";
  }
  return "?";
}

std::vector<double> parse_value_list(std::string_view text) {
  std::vector<double> out;
  std::size_t p = 0;
  while (p <= text.size()) {
    const auto c = text.find(',', p);
    std::string_view tok = text.substr(p, c == std::string_view::npos ? text.npos : c - p);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
      throw ConfigError("values", 0, "bad value '" + std::string(tok) + "'");
    out.push_back(v);
    if (c == std::string_view::npos) break;
    p = c + 1;
  }
  return out;
}

RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis, double value) {
  RunConfig cfg = base;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", value);
  switch (axis) {
  case SweepAxis::Rpm:
    if (value < 0.0) throw ConfigError("values", 0, "rpm must be non-negative");
    cfg.motor_omega = value * 2.0 * std::numbers::pi / 60.0;
    break;
  case SweepAxis::Pitch:
    if (!(value > 0.0)) throw ConfigError("values", 0, "pitch ratio must be positive");
    cfg.params.pitch = value * cfg.params.helix_radius;
    cfg.pitches.assign(cfg.flagella_count, cfg.params.pitch);
    break;
  case SweepAxis::FlagellaCount: {
    if (value != 1.0 && value != 2.0) throw ConfigError("values", 0, "flagella_count must be 1 or 2");
    const double p = cfg.resolved_pitches().front();
    cfg.flagella_count = static_cast<int>(value);
    cfg.pitches.assign(cfg.flagella_count, p);
    break;
  }
  }
  cfg.label = base.label + "_" + to_string(axis) + "_" + buf;
  cfg.validate();
  return cfg;
}

std::vector<RunOutcome> run_sweep(const RunConfig& base, SweepAxis axis,
                                  const std::vector<double>& values, const fs::path& out_dir,
                                  std::ostream* log) {
  if (values.empty()) throw ConfigError("values", 0, "need at least one value");
  std::vector<RunConfig> configs;
  for (double v : values) configs.push_back(apply_sweep_value(base, axis, v));
  std::vector<RunOutcome> outcomes;
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const fs::path dir = out_dir / configs[i].label;
    points.push_back({values[i], dir});
    try {
      outcomes.push_back(run_simulation(configs[i], dir, log));
    } catch (const SolverFailure& e) {
      RunOutcome o;
      o.directory = dir;
      o.message = e.what();
      outcomes.push_back(o);
      if (log) *log << configs[i].label << ": failed: " << e.what() << "\n";
    }
  }
  write_file_atomic(out_dir / "aggregate.csv", aggregate_sweep(axis, points));
  return outcomes;
}

std::string aggregate_sweep(SweepAxis axis, const std::vector<SweepPoint>& points) {
  std::string out = "axis,value,status," + metrics_header() + "\n";
  for (const SweepPoint& p : points) {
    const std::string status = read_run_status(p.directory / "run_meta.cfg");
    std::string row = std::string(to_string(axis)) + "," + g10(p.value) + ",";
    std::string fields;
    if (status == "ok") {
      const RunConfig cfg = load_config(p.directory / "run_meta.cfg");
      fields = metrics_fields(read_trajectory(p.directory / "trajectory.csv"), cfg);
    } else {
      for (int i = 0; i < 17; ++i) fields += "nan,";
      fields += "nan";
    }
    out += row + (status == "ok" ? "ok" : "failed") + "," + fields + "\n";
  }
  return out;
}

std::string metrics_table(const Trajectory& trajectory, const RunConfig& config) {
  return metrics_header() + "\n" + metrics_fields(trajectory, config) + "\n";
}

} // namespace flagsim
