#include "sigmaflow/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

using nlohmann::json;

std::string to_string(Mode m) {
  switch (m) {
    case Mode::FlowLn: return "flow-ln";
    case Mode::FlowDirichlet: return "flow-dirichlet";
    case Mode::Elliptic: return "elliptic";
    case Mode::VerifyBarrier: return "verify-barrier";
    case Mode::CheckCompat: return "check-compat";
    case Mode::Sweep: return "sweep";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::FlowLn, Mode::FlowDirichlet, Mode::Elliptic, Mode::VerifyBarrier, Mode::CheckCompat,
                 Mode::Sweep}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

RadialProfile InitialSpec::profile() const {
  if (kind == Kind::Constant) return constant_profile(value);
  return shifted(PoincareBall{R}.profile(), shift);
}

ScheduleTarget ScheduleSpec::target() const {
  if (kind == Kind::Ln) return LnTarget{xi};
  return DirichletTarget{phi0};
}

namespace {

// Reader over one JSON object that rejects keys it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    allowed_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    allowed_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::string required_string(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key) + ": missing");
    return string(key, "");
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key) + ": expected an array");
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(at(key) + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  /// Call after every key has been read.
  void close() const {
    for (const auto& item : j_.items()) {
      if (!allowed_.count(item.key())) throw ConfigError(at(item.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> allowed_;
};

template <class F>
void checked(const std::string& where, F&& f) {
  try {
    f();
  } catch (const InvalidInput& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

LowSpeedFunction parse_low_speed(const json& j, const std::string& path) {
  Section s(j, path);
  const auto kind_name = s.required_string("kind");
  LowSpeedFunction xi;
  LowSpeedFunction::Kind kind{};
  checked(s.at("kind"), [&] { kind = low_speed_kind_from_string(kind_name); });
  switch (kind) {
    case LowSpeedFunction::Kind::Linear:
      xi = LowSpeedFunction::linear(s.number("c", 1.0), s.number("c0", 1.0), 1.0);
      xi.tau = s.number("tau", xi.c);
      break;
    case LowSpeedFunction::Kind::LogShift:
      xi = LowSpeedFunction::log_shift();
      break;
    case LowSpeedFunction::Kind::Power:
      xi = LowSpeedFunction::power(s.number("alpha", 0.5));
      break;
    case LowSpeedFunction::Kind::IteratedLog:
      xi = LowSpeedFunction::iterated_log(s.integer("depth", 2));
      break;
    case LowSpeedFunction::Kind::Exponential:
      xi = LowSpeedFunction::exponential(s.number("tau", 1.0));
      break;
  }
  xi.t_threshold = s.number("t_threshold", 0.0);
  s.close();
  checked(path, [&] { xi.validate(); });
  return xi;
}

InitialSpec parse_initial(const json& j, const std::string& path) {
  Section s(j, path);
  InitialSpec out;
  const auto kind = s.required_string("kind");
  if (kind == "poincare_shift") {
    out.kind = InitialSpec::Kind::PoincareShift;
    out.R = s.number("R", 1.0);
    out.shift = s.number("shift", 0.0);
    if (!(out.R > 0.0)) s.fail("R must be positive");
  } else if (kind == "constant") {
    out.kind = InitialSpec::Kind::Constant;
    out.value = s.number("value", 0.0);
  } else {
    s.fail("unknown initial kind '" + kind + "'");
  }
  s.close();
  return out;
}

BackgroundGeometry parse_geometry(const json& j) {
  Section s(j, "geometry");
  const int n = s.integer("n", 3);
  const auto curv = s.string("curvature", "flat");
  Curvature c{};
  if (curv == "flat") {
    c = Curvature::Flat;
  } else if (curv == "hyperbolic") {
    c = Curvature::Hyperbolic;
  } else {
    throw ConfigError("geometry.curvature: expected flat or hyperbolic");
  }
  Domain domain = Ball{1.0};
  if (s.has("domain")) {
    Section d(s.raw("domain"), "geometry.domain");
    const auto kind = d.required_string("kind");
    if (kind == "ball") {
      domain = Ball{d.number("b", 1.0)};
    } else if (kind == "annulus") {
      domain = Annulus{d.number("a", 0.5), d.number("b", 1.0)};
    } else {
      d.fail("unknown domain kind '" + kind + "'");
    }
    d.close();
  }
  s.close();
  std::optional<BackgroundGeometry> g;
  checked("geometry", [&] { g.emplace(n, c, domain); });
  return *g;
}

ScheduleSpec parse_schedule(const json& j) {
  Section s(j, "schedule");
  ScheduleSpec out;
  const auto kind = s.required_string("kind");
  if (kind == "ln") {
    out.kind = ScheduleSpec::Kind::Ln;
    if (!s.has("low_speed")) s.fail("ln schedule needs low_speed");
    out.xi = parse_low_speed(s.raw("low_speed"), "schedule.low_speed");
  } else if (kind == "dirichlet") {
    out.kind = ScheduleSpec::Kind::Dirichlet;
    out.phi0 = s.number("phi0", 0.0);
  } else {
    s.fail("unknown schedule kind '" + kind + "'");
  }
  out.options.t_blend = s.number("t_blend", 1.0);
  if (s.has("t1")) out.options.t1 = s.number("t1", 0.0);
  out.options.v_eps = s.number("v_eps", 1e-8);
  s.close();
  if (!(out.options.t_blend > 0.0)) throw ConfigError("schedule.t_blend must be positive");
  if (out.options.t1 && !(*out.options.t1 >= 0.0)) throw ConfigError("schedule.t1 must be nonnegative");
  if (!(out.options.v_eps >= 0.0)) throw ConfigError("schedule.v_eps must be nonnegative");
  return out;
}

void parse_flow(const json& j, RunConfig& f) {
  Section s(j, "flow");
  checked("flow.scheme", [&] { f.scheme = scheme_from_string(s.string("scheme", to_string(f.scheme))); });
  f.dt_safety = s.number("dt_safety", f.dt_safety);
  f.implicit_dt_multiple = s.number("implicit_dt_multiple", f.implicit_dt_multiple);
  f.t_max = s.number("t_max", f.t_max);
  f.mono_tol = s.number("mono_tol", f.mono_tol);
  f.ub_tol = s.number("ub_tol", f.ub_tol);
  f.ut_tol = s.number("ut_tol", f.ut_tol);
  f.res_tol = s.number("res_tol", f.res_tol);
  f.rho_cells = s.integer("rho_cells", f.rho_cells);
  f.retry_max = s.integer("retry_max", f.retry_max);
  f.dt_floor = s.number("dt_floor", f.dt_floor);
  f.run_to_horizon = s.boolean("run_to_horizon", f.run_to_horizon);
  f.halt_on_nonmonotone = s.boolean("halt_on_nonmonotone", f.halt_on_nonmonotone);
  f.series_interval = s.number("series_interval", f.series_interval);
  if (s.has("snapshot_times")) f.snapshot_times = s.numbers("snapshot_times");
  f.sandwich_tol = s.number("sandwich_tol", f.sandwich_tol);
  s.close();
}

std::pair<double, double> parse_window(Section& s, const std::string& key, std::pair<double, double> def) {
  if (!s.has(key)) return def;
  const auto v = s.numbers(key);
  if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] >= v[0])) {
    throw ConfigError(s.at(key) + ": expected [lo, hi] with 0 < lo <= hi");
  }
  return {v[0], v[1]};
}

void parse_diagnostics(const json& j, DiagnosticsSpec& d) {
  Section s(j, "diagnostics");
  std::tie(d.fit_lo, d.fit_hi) = parse_window(s, "fit_window", {d.fit_lo, d.fit_hi});
  std::tie(d.error_lo, d.error_hi) = parse_window(s, "error_window", {d.error_lo, d.error_hi});
  s.close();
}

void parse_newton(const json& j, NewtonConfig& n) {
  Section s(j, "newton");
  n.max_iters = s.integer("max_iters", n.max_iters);
  n.res_tol = s.number("res_tol", n.res_tol);
  n.shrink = s.number("shrink", n.shrink);
  n.step_floor = s.number("step_floor", n.step_floor);
  s.close();
  checked("newton", [&] { n.validate(); });
}

void parse_elliptic(const json& j, EllipticSpec& e) {
  Section s(j, "elliptic");
  if (s.has("boundary_value")) {
    const auto& v = s.raw("boundary_value");
    if (v.is_string() && v.get<std::string>() == "exact") {
      e.exact_boundary = true;
    } else {
      e.boundary_value = s.number("boundary_value", 0.0);
    }
  }
  e.levels = s.numbers("levels");
  s.close();
  for (std::size_t i = 1; i < e.levels.size(); ++i) {
    if (!(e.levels[i] > e.levels[i - 1])) throw ConfigError("elliptic.levels must increase strictly");
  }
}

SearchOptions parse_search(Section& s) {
  SearchOptions o;
  o.max_exponent_A = s.integer("max_exponent_A", o.max_exponent_A);
  o.max_exponent_p = s.integer("max_exponent_p", o.max_exponent_p);
  o.strict_eps = s.number("strict_eps", o.strict_eps);
  if (o.max_exponent_A < 0 || o.max_exponent_p < 1) throw ConfigError("barrier: search exponents out of range");
  return o;
}

BarrierJob parse_barrier(const json& j) {
  Section s(j, "barrier");
  BarrierJob b;
  const auto kind = s.required_string("kind");
  if (kind == "global") {
    b.kind = BarrierJob::Kind::Global;
    b.delta = s.number("delta", 0.1);
    b.r0 = s.number("r0", 0.1);
    b.bridge = s.boolean("bridge", true);
  } else if (kind == "boundary") {
    b.kind = BarrierJob::Kind::Boundary;
    b.delta = s.number("delta", 0.5);
    b.t_lo = s.number("t_lo", 24.0);
    b.t_hi = s.number("t_hi", 1.0e4);
    if (!(b.t_hi > b.t_lo)) s.fail("t_hi must exceed t_lo");
  } else {
    s.fail("unknown barrier kind '" + kind + "'");
  }
  b.search = parse_search(s);
  s.close();
  if (!(b.delta > 0.0) || !(b.r0 > 0.0)) throw ConfigError("barrier: delta and r0 must be positive");
  return b;
}

void parse_compat(const json& j, CompatSpec& c) {
  Section s(j, "compat");
  c.options.tol = s.number("tol", c.options.tol);
  c.options.v_eps = s.number("v_eps", c.options.v_eps);
  if (s.has("schedule_from")) c.schedule_from = parse_initial(s.raw("schedule_from"), "compat.schedule_from");
  s.close();
  if (!(c.options.tol > 0.0) || !(c.options.v_eps >= 0.0)) throw ConfigError("compat: tolerances out of range");
}

SweepSpec parse_sweep(const json& j) {
  Section s(j, "sweep");
  SweepSpec w;
  for (double x : s.numbers("N")) {
    if (x != static_cast<int>(x)) throw ConfigError("sweep.N: expected integers");
    w.N.push_back(static_cast<int>(x));
  }
  for (double x : s.numbers("k")) {
    if (x != static_cast<int>(x)) throw ConfigError("sweep.k: expected integers");
    w.k.push_back(static_cast<int>(x));
  }
  if (s.has("scheme")) {
    const auto& arr = s.raw("scheme");
    if (!arr.is_array()) throw ConfigError("sweep.scheme: expected an array");
    for (const auto& x : arr) {
      if (!x.is_string()) throw ConfigError("sweep.scheme: expected strings");
      checked("sweep.scheme", [&] { w.scheme.push_back(scheme_from_string(x.get<std::string>())); });
    }
  }
  if (s.has("low_speed")) {
    const auto& arr = s.raw("low_speed");
    if (!arr.is_array()) throw ConfigError("sweep.low_speed: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      w.low_speed.push_back(parse_low_speed(arr[i], "sweep.low_speed[" + std::to_string(i) + "]"));
    }
  }
  w.base_mode = mode_from_string(s.string("base_mode", "flow-ln"));
  if (w.base_mode == Mode::Sweep || w.base_mode == Mode::VerifyBarrier || w.base_mode == Mode::CheckCompat) {
    throw ConfigError("sweep.base_mode must be flow-ln, flow-dirichlet or elliptic");
  }
  s.close();
  return w;
}

}  // namespace

Config parse_config(const json& j) {
  Section s(j, "");
  if (!s.has("schema_version")) throw ConfigError("schema_version: missing");
  if (s.integer("schema_version", 0) != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  Config c;
  if (s.has("mode")) c.mode = mode_from_string(s.string("mode", ""));
  if (s.has("geometry")) c.geometry = parse_geometry(s.raw("geometry"));
  c.k = s.integer("k", c.k);
  if (c.k < 1 || c.k > c.geometry.n) throw ConfigError("k must lie in [1, n]");
  if (s.has("grid")) {
    Section g(s.raw("grid"), "grid");
    c.N = g.integer("N", c.N);
    g.close();
  }
  if (s.has("initial")) c.initial = parse_initial(s.raw("initial"), "initial");
  if (s.has("schedule")) c.schedule = parse_schedule(s.raw("schedule"));
  if (s.has("flow")) parse_flow(s.raw("flow"), c.flow);
  c.flow.k = c.k;
  c.flow.N = c.N;
  checked("flow", [&] { c.flow.validate(); });
  if (s.has("diagnostics")) parse_diagnostics(s.raw("diagnostics"), c.diagnostics);
  if (s.has("newton")) parse_newton(s.raw("newton"), c.newton);
  if (s.has("elliptic")) parse_elliptic(s.raw("elliptic"), c.elliptic);
  if (s.has("barrier")) c.barrier = parse_barrier(s.raw("barrier"));
  if (s.has("compat")) parse_compat(s.raw("compat"), c.compat);
  if (s.has("sweep")) c.sweep = parse_sweep(s.raw("sweep"));
  s.close();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const LowSpeedFunction& xi) {
  json j{{"kind", to_string(xi.kind)}, {"t_threshold", xi.t_threshold}};
  switch (xi.kind) {
    case LowSpeedFunction::Kind::Linear:
      j["c"] = xi.c;
      j["c0"] = xi.c0;
      j["tau"] = xi.tau;
      break;
    case LowSpeedFunction::Kind::Power: j["alpha"] = xi.alpha; break;
    case LowSpeedFunction::Kind::IteratedLog: j["depth"] = xi.depth; break;
    case LowSpeedFunction::Kind::Exponential: j["tau"] = xi.tau; break;
    case LowSpeedFunction::Kind::LogShift: break;
  }
  return j;
}

json to_json(const InitialSpec& s) {
  if (s.kind == InitialSpec::Kind::Constant) return json{{"kind", "constant"}, {"value", s.value}};
  return json{{"kind", "poincare_shift"}, {"R", s.R}, {"shift", s.shift}};
}

json to_json(const Config& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (c.mode) j["mode"] = to_string(*c.mode);

  json dom;
  if (const auto* b = std::get_if<Ball>(&c.geometry.domain)) {
    dom = {{"kind", "ball"}, {"b", b->b}};
  } else {
    const auto& a = std::get<Annulus>(c.geometry.domain);
    dom = {{"kind", "annulus"}, {"a", a.a}, {"b", a.b}};
  }
  j["geometry"] = {{"n", c.geometry.n},
                   {"curvature", c.geometry.curvature == Curvature::Flat ? "flat" : "hyperbolic"},
                   {"domain", dom}};
  j["k"] = c.k;
  j["grid"] = {{"N", c.N}};
  j["initial"] = to_json(c.initial);

  if (c.schedule) {
    json s;
    if (c.schedule->kind == ScheduleSpec::Kind::Ln) {
      s = {{"kind", "ln"}, {"low_speed", to_json(c.schedule->xi)}};
    } else {
      s = {{"kind", "dirichlet"}, {"phi0", c.schedule->phi0}};
    }
    s["t_blend"] = c.schedule->options.t_blend;
    if (c.schedule->options.t1) s["t1"] = *c.schedule->options.t1;
    s["v_eps"] = c.schedule->options.v_eps;
    j["schedule"] = s;
  }

  const auto& f = c.flow;
  j["flow"] = {{"scheme", to_string(f.scheme)},
               {"dt_safety", f.dt_safety},
               {"implicit_dt_multiple", f.implicit_dt_multiple},
               {"t_max", f.t_max},
               {"mono_tol", f.mono_tol},
               {"ub_tol", f.ub_tol},
               {"ut_tol", f.ut_tol},
               {"res_tol", f.res_tol},
               {"rho_cells", f.rho_cells},
               {"retry_max", f.retry_max},
               {"dt_floor", f.dt_floor},
               {"run_to_horizon", f.run_to_horizon},
               {"halt_on_nonmonotone", f.halt_on_nonmonotone},
               {"series_interval", f.series_interval},
               {"snapshot_times", f.snapshot_times},
               {"sandwich_tol", f.sandwich_tol}};
  j["diagnostics"] = {{"fit_window", {c.diagnostics.fit_lo, c.diagnostics.fit_hi}},
                      {"error_window", {c.diagnostics.error_lo, c.diagnostics.error_hi}}};
  j["newton"] = {{"max_iters", c.newton.max_iters},
                 {"res_tol", c.newton.res_tol},
                 {"shrink", c.newton.shrink},
                 {"step_floor", c.newton.step_floor}};
  json e{{"levels", c.elliptic.levels}};
  if (c.elliptic.boundary_value) e["boundary_value"] = *c.elliptic.boundary_value;
  if (c.elliptic.exact_boundary) e["boundary_value"] = "exact";
  j["elliptic"] = e;

  if (c.barrier) {
    const auto& b = *c.barrier;
    json bj{{"delta", b.delta},
            {"max_exponent_A", b.search.max_exponent_A},
            {"max_exponent_p", b.search.max_exponent_p},
            {"strict_eps", b.search.strict_eps}};
    if (b.kind == BarrierJob::Kind::Global) {
      bj["kind"] = "global";
      bj["r0"] = b.r0;
      bj["bridge"] = b.bridge;
    } else {
      bj["kind"] = "boundary";
      bj["t_lo"] = b.t_lo;
      bj["t_hi"] = b.t_hi;
    }
    j["barrier"] = bj;
  }

  json cj{{"tol", c.compat.options.tol}, {"v_eps", c.compat.options.v_eps}};
  if (c.compat.schedule_from) cj["schedule_from"] = to_json(*c.compat.schedule_from);
  j["compat"] = cj;

  if (c.sweep) {
    json schemes = json::array(), speeds = json::array();
    for (auto s : c.sweep->scheme) schemes.push_back(to_string(s));
    for (const auto& x : c.sweep->low_speed) speeds.push_back(to_json(x));
    j["sweep"] = {{"N", c.sweep->N},
                  {"k", c.sweep->k},
                  {"scheme", schemes},
                  {"low_speed", speeds},
                  {"base_mode", to_string(c.sweep->base_mode)}};
  }
  return j;
}

void require_mode_inputs(const Config& c, Mode mode) {
  switch (mode) {
    case Mode::FlowLn:
      if (!c.schedule || c.schedule->kind != ScheduleSpec::Kind::Ln) {
        throw ConfigError("flow-ln needs a schedule of kind ln");
      }
      break;
    case Mode::FlowDirichlet:
      if (!c.schedule || c.schedule->kind != ScheduleSpec::Kind::Dirichlet) {
        throw ConfigError("flow-dirichlet needs a schedule of kind dirichlet");
      }
      break;
    case Mode::CheckCompat:
      if (!c.schedule) throw ConfigError("check-compat needs a schedule");
      break;
    case Mode::VerifyBarrier:
      if (!c.barrier) throw ConfigError("verify-barrier needs a barrier section");
      if (c.barrier->kind == BarrierJob::Kind::Boundary &&
          (!c.schedule || c.schedule->kind != ScheduleSpec::Kind::Ln)) {
        throw ConfigError("a boundary barrier needs an ln schedule for its low-speed function");
      }
      break;
    case Mode::Sweep: {
      if (!c.sweep) throw ConfigError("sweep needs a sweep section");
      Config base = c;
      require_mode_inputs(base, c.sweep->base_mode);
      if (!c.sweep->low_speed.empty() && c.sweep->base_mode != Mode::FlowLn) {
        throw ConfigError("sweep.low_speed applies to flow-ln only");
      }
      for (int k : c.sweep->k) {
        if (k < 1 || k > c.geometry.n) throw ConfigError("sweep.k: values must lie in [1, n]");
      }
      for (int N : c.sweep->N) {
        if (N < 16) throw ConfigError("sweep.N: values must be >= 16");
      }
      break;
    }
    case Mode::Elliptic:
      if (c.elliptic.exact_boundary && c.initial.kind != InitialSpec::Kind::PoincareShift) {
        throw ConfigError("elliptic.boundary_value \"exact\" needs a poincare_shift initial datum");
      }
      break;
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const Config& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

}  // namespace sigmaflow
