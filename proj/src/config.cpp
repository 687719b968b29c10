#include "flagsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace flagsim {

ConfigError::ConfigError(std::string key, int line, const std::string& what)
    : InvalidInput(line > 0 ? "line " + std::to_string(line) + ": " + key + ": " + what
                            : key + ": " + what),
      key_(std::move(key)), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Ctx {
  std::string_view key;
  int line;
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(std::string(key), line, what);
  }
};

double to_number(const Ctx& c, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    c.fail("expected a number, got '" + std::string(v) + "'");
  return out;
}

std::vector<double> to_list(const Ctx& c, std::string_view v) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    out.push_back(to_number(c, v.substr(pos, comma == std::string_view::npos ? v.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double positive(const Ctx& c, std::string_view v) {
  const double x = to_number(c, v);
  if (!(x > 0.0)) c.fail("must be positive");
  return x;
}

double non_negative(const Ctx& c, std::string_view v) {
  const double x = to_number(c, v);
  if (x < 0.0) c.fail("must be non-negative");
  return x;
}

int to_int(const Ctx& c, std::string_view v) {
  const double x = to_number(c, v);
  if (x != std::floor(x) || std::abs(x) > 1e9) c.fail("expected an integer");
  return static_cast<int>(x);
}

bool to_bool(const Ctx& c, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  c.fail("expected true or false, got '" + std::string(v) + "'");
}

std::string num(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + num(xs[i]);
  return s;
}

struct Entry {
  const char* name;
  std::function<void(RunConfig&, const Ctx&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define FLAGSIM_PARAM(field, check)                                                          \
  Entry{#field, [](RunConfig& r, const Ctx& c, std::string_view v) { r.params.field = check(c, v); }, \
        [](const RunConfig& r) { return num(r.params.field); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      FLAGSIM_PARAM(helix_radius, positive),
      {"pitch",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         std::vector<double> p = to_list(c, v);
         if (p.size() > 2) c.fail("at most two values (one per flagellum)");
         for (double x : p)
           if (!(x > 0.0)) c.fail("must be positive");
         r.pitches = p;
         r.params.pitch = p.front();
       },
       [](const RunConfig& r) { return list(r.resolved_pitches()); }},
      FLAGSIM_PARAM(axial_length, positive),
      FLAGSIM_PARAM(head_radius, positive),
      FLAGSIM_PARAM(head_height, positive),
      FLAGSIM_PARAM(rod_radius, positive),
      FLAGSIM_PARAM(youngs_modulus, positive),
      {"nu",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         const double x = to_number(c, v);
         if (!(x > 0.0 && x <= 0.5)) c.fail("must lie in (0, 0.5], got " + num(x));
         r.params.poisson_ratio = x;
       },
       [](const RunConfig& r) { return num(r.params.poisson_ratio); }},
      FLAGSIM_PARAM(density, positive),
      FLAGSIM_PARAM(fluid_density, positive),
      FLAGSIM_PARAM(viscosity, positive),
      FLAGSIM_PARAM(time_step, positive),
      FLAGSIM_PARAM(regularization, positive),
      FLAGSIM_PARAM(edge_length, positive),
      FLAGSIM_PARAM(drag_translational, positive),
      FLAGSIM_PARAM(drag_rotational, positive),
      FLAGSIM_PARAM(base_separation, positive),
      FLAGSIM_PARAM(head_stiffness_factor, positive),
      {"flagella_count",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         const int n = to_int(c, v);
         if (n != 1 && n != 2) c.fail("must be 1 or 2");
         r.flagella_count = n;
       },
       [](const RunConfig& r) { return std::to_string(r.flagella_count); }},
      {"handedness",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         v = trim(v);
         if (v == "left") r.handedness = Handedness::Left;
         else if (v == "right") r.handedness = Handedness::Right;
         else c.fail("expected left or right");
       },
       [](const RunConfig& r) {
         return std::string(r.handedness == Handedness::Left ? "left" : "right");
       }},
      {"motor_omega",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.motor_omega = non_negative(c, v); },
       [](const RunConfig& r) { return num(r.motor_omega); }},
      {"ramp_time",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.ramp_time = non_negative(c, v); },
       [](const RunConfig& r) { return num(r.ramp_time); }},
      {"motor_direction",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         std::vector<double> d = to_list(c, v);
         if (d.size() > 2) c.fail("at most two values (one per motor)");
         for (double x : d)
           if (x != 1.0 && x != -1.0) c.fail("each direction must be 1 or -1");
         r.motor_direction = {d[0], d.size() > 1 ? d[1] : d[0]};
       },
       [](const RunConfig& r) {
         return list({r.motor_direction[0], r.motor_direction[1]});
       }},
      {"total_time",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.total_time = non_negative(c, v); },
       [](const RunConfig& r) { return num(r.total_time); }},
      {"output_interval",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.output_interval = positive(c, v); },
       [](const RunConfig& r) { return num(r.output_interval); }},
      {"steady_fraction",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         const double x = to_number(c, v);
         if (!(x > 0.0 && x <= 1.0)) c.fail("must lie in (0, 1]");
         r.steady_fraction = x;
       },
       [](const RunConfig& r) { return num(r.steady_fraction); }},
      {"normalization_length",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         r.normalization_length = non_negative(c, v);
       },
       [](const RunConfig& r) { return num(r.normalization_length); }},
      {"newton_tol",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.solver.newton_tol = non_negative(c, v); },
       [](const RunConfig& r) { return num(r.solver.newton_tol); }},
      {"max_newton_iter",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         const int n = to_int(c, v);
         if (n < 1) c.fail("must be at least 1");
         r.solver.max_newton_iter = n;
       },
       [](const RunConfig& r) { return std::to_string(r.solver.max_newton_iter); }},
      {"max_dt_halvings",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         const int n = to_int(c, v);
         if (n < 0 || n > 20) c.fail("must lie in [0, 20]");
         r.solver.max_halvings = n;
       },
       [](const RunConfig& r) { return std::to_string(r.solver.max_halvings); }},
      {"contact_stiffness",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         r.solver.contact_stiffness = non_negative(c, v);
       },
       [](const RunConfig& r) { return num(r.solver.contact_stiffness); }},
      {"hydrodynamics",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.solver.hydrodynamics = to_bool(c, v); },
       [](const RunConfig& r) { return std::string(r.solver.hydrodynamics ? "true" : "false"); }},
      {"contact",
       [](RunConfig& r, const Ctx& c, std::string_view v) { r.solver.contact = to_bool(c, v); },
       [](const RunConfig& r) { return std::string(r.solver.contact ? "true" : "false"); }},
      {"actuation_mode",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         v = trim(v);
         if (v == "natural_twist") r.solver.actuation = ActuationMode::NaturalTwist;
         else if (v == "stiff_motor") r.solver.actuation = ActuationMode::StiffMotor;
         else c.fail("expected natural_twist or stiff_motor");
       },
       [](const RunConfig& r) {
         return std::string(r.solver.actuation == ActuationMode::NaturalTwist ? "natural_twist"
                                                                              : "stiff_motor");
       }},
      {"output_dir",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         v = trim(v);
         if (v.empty()) c.fail("must not be empty");
         r.output_dir = std::string(v);
       },
       [](const RunConfig& r) { return r.output_dir; }},
      {"label",
       [](RunConfig& r, const Ctx& c, std::string_view v) {
         v = trim(v);
         if (v.empty()) c.fail("must not be empty");
         for (char ch : v)
           if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
             c.fail("may only contain letters, digits, '_', '-' and '.'");
         r.label = std::string(v);
       },
       [](const RunConfig& r) { return r.label; }},
  };
  return table;
}

#undef FLAGSIM_PARAM

const std::vector<std::pair<std::string_view, std::string_view>>& aliases() {
  static const std::vector<std::pair<std::string_view, std::string_view>> a = {
      {"poisson_ratio", "nu"},           {"E", "youngs_modulus"},
      {"mu", "viscosity"},               {"dt", "time_step"},
      {"epsilon", "regularization"},     {"C_t", "drag_translational"},
      {"C_r", "drag_rotational"},        {"r0", "rod_radius"},
  };
  return a;
}

} // namespace

std::vector<double> RunConfig::resolved_pitches() const {
  if (pitches.empty()) return std::vector<double>(flagella_count, params.pitch);
  if (static_cast<int>(pitches.size()) == flagella_count) return pitches;
  if (pitches.size() == 1) return std::vector<double>(flagella_count, pitches[0]);
  return pitches;
}

ActuationSchedule RunConfig::schedule() const {
  ActuationSchedule s;
  s.omega_target = motor_omega;
  s.ramp_time = ramp_time;
  s.direction = motor_direction;
  return s;
}

void RunConfig::validate() const {
  try {
    params.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("params", 0, e.what());
  }
  if (static_cast<int>(resolved_pitches().size()) != flagella_count)
    throw ConfigError("pitch", 0, "expected " + std::to_string(flagella_count) + " values");
  const double lc = helix_contour_length(params.helix_radius, params.pitch, params.axial_length);
  if (params.edge_length >= lc)
    throw ConfigError("edge_length", 0, "must be shorter than the helix contour length");
  const double steps = output_interval / params.time_step;
  if (std::abs(steps - std::round(steps)) > 1e-6 * steps || std::round(steps) < 1.0)
    throw ConfigError("output_interval", 0, "must be a multiple of time_step");
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value, int line) {
  const Ctx ctx{key, line};
  std::string_view name = key;
  for (const auto& [alias, canonical] : aliases())
    if (key == alias) name = canonical;
  if (name == "motor_rpm") {
    config.motor_omega = non_negative(ctx, value) * 2.0 * std::numbers::pi / 60.0;
    return;
  }
  for (const Entry& e : entries()) {
    if (name == e.name) {
      e.set(config, ctx, value);
      return;
    }
  }
  ctx.fail("unknown key");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(line), line_no, "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", line_no, "missing key before '='");
    set_config_value(cfg, key, line.substr(eq + 1), line_no);
  }
  cfg.validate();
  cfg.pitches = cfg.resolved_pitches();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.emplace_back(e.name);
  return keys;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const Entry& e : entries()) out += std::string(e.name) + " = " + e.get(config) + "\n";
  return out;
}

} // namespace flagsim
