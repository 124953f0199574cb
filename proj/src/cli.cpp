#include "sigmaflow/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sigmaflow/barriers.hpp"
#include "sigmaflow/elliptic.hpp"
#include "sigmaflow/error.hpp"
#include "sigmaflow/flow.hpp"
#include "sigmaflow/io.hpp"
#include "sigmaflow/radial_operator.hpp"

namespace sigmaflow {

using nlohmann::json;

namespace {

using Reference = std::function<double(double)>;

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

bool is_ball(const BackgroundGeometry& g) { return std::holds_alternative<Ball>(g.domain); }

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// Known steady state the run should approach, when there is one.
std::optional<Reference> reference_solution(const Config& c, Mode mode) {
  const bool flat = c.geometry.curvature == Curvature::Flat;
  const bool poincare = c.initial.kind == InitialSpec::Kind::PoincareShift;
  const PoincareBall pb{c.initial.R};
  const double b = c.geometry.outer_radius();
  const Reference exact = [pb](double r) { return pb.value(r); };
  const Reference zero = [](double) { return 0.0; };
  const auto bvals = c.geometry.boundary_radii();
  switch (mode) {
    case Mode::FlowLn:
      if (flat && poincare && is_ball(c.geometry) && same(b, pb.R)) return exact;
      return std::nullopt;
    case Mode::FlowDirichlet: {
      const double phi0 = c.schedule->phi0;
      if (!flat && phi0 == 0.0) return zero;
      if (flat && poincare && b < pb.R && bvals.size() == 1 && same(phi0, pb.value(b))) return exact;
      return std::nullopt;
    }
    case Mode::Elliptic:
      if (!c.elliptic.levels.empty()) return std::nullopt;
      if (flat && poincare && c.elliptic.exact_boundary && b < pb.R) return exact;
      if (!flat && c.elliptic.boundary_value && *c.elliptic.boundary_value == 0.0) return zero;
      return std::nullopt;
    default: return std::nullopt;
  }
}

double window_error(const RadialGrid& grid, std::span<const double> u, const BackgroundGeometry& geom,
                    const Reference& ref, double lo, double hi) {
  double e = std::nan("");
  for (int i = 0; i < grid.size(); ++i) {
    const double r = grid.nodes[static_cast<std::size_t>(i)];
    const double d = geom.distance_to_boundary(r);
    if (d < lo * (1 - 1e-12) || d > hi * (1 + 1e-12)) continue;
    const double diff = std::abs(u[static_cast<std::size_t>(i)] - ref(r));
    e = std::isnan(e) ? diff : std::max(e, diff);
  }
  return e;
}

json fit_json(const AsymptoticFit& f, double lo, double hi) {
  return {{"window", {lo, hi}}, {"min", f.min}, {"sup", f.sup}, {"mean", f.mean}, {"nodes", f.nodes}};
}

json metrics_json(double t_final, double window_err, double ut_sup, double res_sup, double fit_sup,
                  double fit_mean, int iterations) {
  return {{"t_final", finite_or_null(t_final)},
          {"window_error", finite_or_null(window_err)},
          {"ut_sup_interior", finite_or_null(ut_sup)},
          {"residual_sup", finite_or_null(res_sup)},
          {"fit_sup", finite_or_null(fit_sup)},
          {"fit_mean", finite_or_null(fit_mean)},
          {"iterations", iterations}};
}

std::string error_kind(SolverError::Kind k) {
  switch (k) {
    case SolverError::Kind::IterationCap: return "iteration_cap";
    case SolverError::Kind::LineSearchStall: return "line_search_stall";
    case SolverError::Kind::SingularJacobian: return "singular_jacobian";
    case SolverError::Kind::ConeCollapse: return "cone_collapse";
    case SolverError::Kind::NonMonotone: return "non_monotone";
    case SolverError::Kind::InvalidState: return "invalid_state";
  }
  return "solver";
}

// Folds solver-side failures into the artifacts.
Artifacts guarded(const std::function<Artifacts()>& body) {
  auto fail = [](int code, const std::string& kind, const std::string& msg) {
    Artifacts a;
    a.exit_code = code;
    a.summary["status"] = "error";
    a.summary["error"] = {{"kind", kind}, {"message", msg}};
    a.summary["metrics"] = metrics_json(NAN, NAN, NAN, NAN, NAN, NAN, 0);
    return a;
  };
  try {
    return body();
  } catch (const SolverError& e) {
    const int code = e.kind() == SolverError::Kind::ConeCollapse ? kExitConeCollapse : kExitSolverError;
    return fail(code, error_kind(e.kind()), e.what());
  } catch (const ConeViolation& e) {
    return fail(kExitConeCollapse, "cone_violation", e.what());
  } catch (const ConstructionError& e) {
    return fail(kExitSolverError, "construction", e.what());
  } catch (const SingularityError& e) {
    return fail(kExitSolverError, "singularity", e.what());
  }
}

std::string snapshot_csv(const RadialGrid& grid, const FlowState& s) {
  std::ostringstream os;
  write_snapshot_csv(os, grid, s);
  return os.str();
}

json schedule_json(const BoundarySchedule& sched) {
  json comps = json::array();
  for (const auto& c : sched.components) {
    const auto j0 = c.eval(0.0);
    json tail;
    if (const auto* l = std::get_if<LogTail>(&c.tail)) {
      tail = {{"kind", "log"}, {"offset", l->offset}};
    } else if (const auto* e = std::get_if<ExponentialTail>(&c.tail)) {
      tail = {{"kind", "exponential"}, {"target", e->target}, {"amplitude", e->amplitude}, {"t_ref", e->t_ref}};
    } else {
      tail = {{"kind", "constant"}, {"value", std::get<ConstantTail>(c.tail).value}};
    }
    comps.push_back({{"radius", c.radius},
                     {"phi", j0.value},
                     {"phi_t", j0.d1},
                     {"phi_tt", j0.d2},
                     {"t_blend", c.t_blend},
                     {"decay_amplitude", c.decay_amplitude},
                     {"tail", tail}});
  }
  return comps;
}

Artifacts flow_mode(const Config& c, Mode mode) {
  return guarded([&] {
    Artifacts a;
    const auto& geom = c.geometry;
    const auto grid = make_grid(geom, c.N);
    const auto u0 = c.initial.profile();
    const auto ref = reference_solution(c, mode);
    RunConfig cfg = c.flow;
    if (mode == Mode::FlowLn && ref) cfg.upper_envelope = PoincareBall{c.initial.R}.profile();
    const auto sched = build_schedule(c.schedule->target(), u0, grid, geom, c.k, c.schedule->options);
    const auto r = run(geom, cfg, u0, sched);

    std::ostringstream series;
    write_series_csv(series, r.series);
    a.files["series.csv"] = series.str();
    json snaps = json::array();
    auto add_snapshot = [&](const FlowState& s) {
      char name[40];
      std::snprintf(name, sizeof name, "snapshots/snapshot_%03zu.csv", snaps.size());
      a.files[name] = snapshot_csv(grid, s);
      snaps.push_back({{"file", name}, {"t", s.t}});
    };
    for (const auto& s : r.snapshots) add_snapshot(s.state);

    const auto& f = r.final_state;
    const double werr =
        ref ? window_error(grid, f.u, geom, *ref, c.diagnostics.error_lo, c.diagnostics.error_hi) : std::nan("");
    double fit_sup = NAN, fit_mean = NAN;
    auto& s = a.summary;
    s["status"] = "ok";
    s["termination"] = to_string(r.termination);
    s["t_final"] = f.t;
    s["steps"] = r.steps;
    s["rejections"] = r.rejections;
    s["schedule"] = schedule_json(sched);
    s["diagnostics"] = {{"ut_sup_interior", f.ut_sup_interior},
                        {"residual_sup", f.residual_sup},
                        {"cone_margin", f.cone_margin},
                        {"grad_sup", f.grad_sup},
                        {"hess_sup", f.hess_sup},
                        {"error_window", {c.diagnostics.error_lo, c.diagnostics.error_hi}},
                        {"window_error", finite_or_null(werr)}};
    const auto& m = r.monitors;
    s["monitors"] = {{"monotone_run", m.monotone_run},
                     {"min_ut", m.min_ut},
                     {"max_ut_interior", m.max_ut_interior},
                     {"ut_upper_bound", m.ut_upper_bound},
                     {"ut_bound_ok", m.ut_bound_ok},
                     {"max_above_envelope", m.max_above_envelope},
                     {"min_above_initial", m.min_above_initial},
                     {"sandwich_ok", m.sandwich_ok},
                     {"residual_ripple", m.residual_ripple}};
    if (mode == Mode::FlowLn) {
      const auto fit = ln_asymptotic_fit(grid, f.u, geom, c.diagnostics.fit_lo, c.diagnostics.fit_hi);
      s["ln_asymptotic_fit"] = fit_json(fit, c.diagnostics.fit_lo, c.diagnostics.fit_hi);
      s["ln_asymptotic_fit"]["snapshot"] = snaps.back()["file"];
      fit_sup = fit.sup;
      fit_mean = fit.mean;
    }
    s["files"] = {{"series", "series.csv"}, {"snapshots", snaps}};
    s["metrics"] = metrics_json(f.t, werr, f.ut_sup_interior, f.residual_sup, fit_sup, fit_mean, 0);
    return a;
  });
}

FlowState steady_state(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::vector<double> u) {
  FlowState s;
  s.u = std::move(u);
  const auto res = discrete_residual(geom, k, grid, s.u);
  s.residual = res.value;
  s.eigen = res.eigen;
  s.u_t.assign(s.u.size(), 0.0);
  for (int i = 0; i < grid.size(); ++i) {
    if (!grid.is_boundary(i)) s.u_t[static_cast<std::size_t>(i)] = res.value[static_cast<std::size_t>(i)] / (2.0 * k);
  }
  return s;
}

json newton_json(const NewtonResult& r) {
  return {{"iterations", r.iterations},
          {"residual_history", r.residual_history},
          {"step_lengths", r.step_lengths},
          {"kappa_q", r.kappa_q}};
}

Artifacts elliptic_mode(const Config& c) {
  return guarded([&] {
    Artifacts a;
    const auto& geom = c.geometry;
    const auto grid = make_grid(geom, c.N);
    auto init = sample(c.initial.profile(), grid);
    auto& s = a.summary;
    s["status"] = "ok";
    if (!c.elliptic.levels.empty()) {
      const auto cr = continuation_to_ln(geom, c.k, grid, c.elliptic.levels, init, c.newton, c.diagnostics.error_lo,
                                         c.diagnostics.error_hi);
      json levels = json::array();
      for (std::size_t m = 0; m < cr.solutions.size(); ++m) {
        char name[40];
        std::snprintf(name, sizeof name, "snapshots/level_%02zu.csv", m);
        a.files[name] = snapshot_csv(grid, steady_state(geom, c.k, grid, cr.solutions[m].u));
        auto lj = newton_json(cr.solutions[m]);
        lj["level"] = cr.levels[m];
        lj["file"] = name;
        levels.push_back(lj);
      }
      s["levels"] = levels;
      s["cauchy"] = cr.cauchy;
      s["min_increment"] = cr.min_increment;
      const auto& last = cr.solutions.back();
      double fit_sup = NAN, fit_mean = NAN;
      if (c.geometry.curvature == Curvature::Flat && is_ball(geom)) {
        const auto fit = ln_asymptotic_fit(grid, last.u, geom, c.diagnostics.fit_lo, c.diagnostics.fit_hi);
        s["ln_asymptotic_fit"] = fit_json(fit, c.diagnostics.fit_lo, c.diagnostics.fit_hi);
        fit_sup = fit.sup;
        fit_mean = fit.mean;
      }
      int its = 0;
      for (const auto& sol : cr.solutions) its += sol.iterations;
      s["metrics"] = metrics_json(NAN, NAN, NAN, last.residual_history.back(), fit_sup, fit_mean, its);
      return a;
    }

    const PoincareBall pb{c.initial.R};
    for (int b : grid.boundary_index) {
      const auto ub = static_cast<std::size_t>(b);
      if (c.elliptic.exact_boundary) {
        init[ub] = pb.value(grid.nodes[ub]);
      } else if (c.elliptic.boundary_value) {
        init[ub] = *c.elliptic.boundary_value;
      }
    }
    const auto nr = newton_solve(geom, c.k, grid, init, c.newton);
    a.files["snapshots/solution.csv"] = snapshot_csv(grid, steady_state(geom, c.k, grid, nr.u));
    s["newton"] = newton_json(nr);
    s["boundary_values"] = [&] {
      json v = json::array();
      for (int b : grid.boundary_index) v.push_back({{"radius", grid.nodes[b]}, {"value", nr.u[b]}});
      return v;
    }();
    const auto ref = reference_solution(c, Mode::Elliptic);
    double werr = NAN;
    if (ref) {
      double sup = 0.0;
      for (int i = 0; i < grid.size(); ++i) sup = std::max(sup, std::abs(nr.u[i] - (*ref)(grid.nodes[i])));
      werr = window_error(grid, nr.u, geom, *ref, c.diagnostics.error_lo, c.diagnostics.error_hi);
      s["error_sup"] = sup;
    }
    s["diagnostics"] = {{"error_window", {c.diagnostics.error_lo, c.diagnostics.error_hi}},
                        {"window_error", finite_or_null(werr)}};
    s["files"] = {{"solution", "snapshots/solution.csv"}};
    s["metrics"] = metrics_json(NAN, werr, NAN, nr.residual_history.back(), NAN, NAN, nr.iterations);
    return a;
  });
}

json rows_json(const std::vector<SweepRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"A", r.A},
                   {"p", r.p},
                   {"min_margin", finite_or_null(r.min_margin)},
                   {"nonpositive", r.nonpositive},
                   {"accepted", r.accepted}});
  }
  return out;
}

json spec_json(const BarrierSpec& b) {
  json j{{"A", b.A}, {"p", b.p}, {"delta", b.delta}, {"r0", b.r0}};
  j["window"] = b.smoothing ? json{{"s_lo", b.smoothing->s_lo}, {"s_hi", b.smoothing->s_hi}} : json(nullptr);
  return j;
}

Artifacts barrier_mode(const Config& c) {
  return guarded([&] {
    Artifacts a;
    const auto& b = *c.barrier;
    auto& s = a.summary;
    s["status"] = "ok";
    if (b.kind == BarrierJob::Kind::Global) {
      const auto grid = make_grid(c.geometry, c.N);
      const auto r = search_global_subsolution(c.geometry, grid, c.k, b.delta, b.r0, b.bridge, b.search);
      s["kind"] = "global";
      s["found"] = r.found ? spec_json(*r.found) : json(nullptr);
      s["report"] = {{"min_margin", finite_or_null(r.report.min_margin)},
                     {"worst_node", r.report.worst_node},
                     {"cone_ok", r.report.cone_ok},
                     {"cone_violations", r.report.cone_violations},
                     {"is_strict", r.report.is_strict},
                     {"samples", r.report.samples}};
      s["rows"] = rows_json(r.rows);
      a.exit_code = r.found ? kExitOk : kExitCheckFailed;
    } else {
      const auto& xi = c.schedule->xi;
      const auto r = search_boundary_barrier(c.geometry, xi, c.k, b.delta, b.t_lo, b.t_hi, b.search);
      s["kind"] = "boundary";
      s["strip_width"] = 1.0 / (8.0 * c.geometry.n * xi.tau);
      s["time_range"] = {b.t_lo, b.t_hi};
      s["found"] = r.found ? spec_json(*r.found) : json(nullptr);
      s["check"] = {{"min_margin", finite_or_null(r.check.min_margin)},
                    {"worst_rho", r.check.worst_rho},
                    {"worst_t", r.check.worst_t},
                    {"cone_ok", r.check.cone_ok},
                    {"samples", r.check.samples}};
      s["rows"] = rows_json(r.rows);
      a.exit_code = r.found ? kExitOk : kExitCheckFailed;
    }
    s["passed"] = a.exit_code == kExitOk;
    s["metrics"] = metrics_json(NAN, NAN, NAN, NAN, NAN, NAN, 0);
    return a;
  });
}

Artifacts compat_mode(const Config& c) {
  return guarded([&] {
    Artifacts a;
    auto& s = a.summary;
    const auto grid = make_grid(c.geometry, c.N);
    const auto u0 = c.initial.profile();
    const auto from = c.compat.schedule_from ? c.compat.schedule_from->profile() : u0;
    s["status"] = "ok";
    s["metrics"] = metrics_json(NAN, NAN, NAN, NAN, NAN, NAN, 0);
    BoundarySchedule sched;
    try {
      sched = build_schedule(c.schedule->target(), from, grid, c.geometry, c.k, c.schedule->options);
    } catch (const ConstructionError& e) {
      s["passed"] = false;
      s["construction_error"] = e.what();
      a.exit_code = kExitCheckFailed;
      return a;
    }
    const auto rep = check_compatibility(u0, sched, grid, c.geometry, c.k, c.compat.options);
    json lines = json::array();
    for (const auto& l : rep.lines) {
      lines.push_back({{"radius", l.radius},
                       {"value_gap", l.value_gap},
                       {"slope_gap", l.slope_gap},
                       {"curvature_gap", l.curvature_gap},
                       {"v", l.v},
                       {"L0v", l.L0v},
                       {"value_ok", l.value_ok},
                       {"slope_ok", l.slope_ok},
                       {"curvature_ok", l.curvature_ok},
                       {"zero_slope_clause", to_string(l.clause14)}});
    }
    s["lines"] = lines;
    s["schedule"] = schedule_json(sched);
    s["passed"] = rep.ok();
    a.exit_code = rep.ok() ? kExitOk : kExitCheckFailed;
    return a;
  });
}

Artifacts dispatch(const Config& c, Mode mode, std::uint64_t seed, int jobs);

struct SweepCase {
  Config config;
  int N = 0;
  int k = 0;
  Scheme scheme{};
  int low_speed = -1;  // index into sweep.low_speed, -1 when the axis is empty
};

std::string csv_number(const json& j) {
  return j.is_number() ? format_csv_double(j.get<double>()) : std::string();
}

Artifacts sweep_mode(const Config& c, std::uint64_t seed, int jobs) {
  const auto& w = *c.sweep;
  const std::vector<int> Ns = w.N.empty() ? std::vector<int>{c.N} : w.N;
  const std::vector<int> ks = w.k.empty() ? std::vector<int>{c.k} : w.k;
  const std::vector<Scheme> schemes = w.scheme.empty() ? std::vector<Scheme>{c.flow.scheme} : w.scheme;
  const int n_speed = w.low_speed.empty() ? 1 : static_cast<int>(w.low_speed.size());

  std::vector<SweepCase> cases;
  for (int ls = 0; ls < n_speed; ++ls) {
    for (auto scheme : schemes) {
      for (int k : ks) {
        for (int N : Ns) {
          SweepCase sc{c, N, k, scheme, w.low_speed.empty() ? -1 : ls};
          sc.config.sweep.reset();
          sc.config.mode = w.base_mode;
          sc.config.N = sc.config.flow.N = N;
          sc.config.k = sc.config.flow.k = k;
          sc.config.flow.scheme = scheme;
          if (sc.low_speed >= 0) sc.config.schedule->xi = w.low_speed[static_cast<std::size_t>(ls)];
          cases.push_back(std::move(sc));
        }
      }
    }
  }

  std::vector<Artifacts> results(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        results[i] = dispatch(cases[i].config, w.base_mode, seed, 1);
      } catch (const Error& e) {
        results[i].exit_code = kExitSolverError;
        results[i].summary = {{"status", "error"},
                              {"error", {{"kind", "invalid_input"}, {"message", e.what()}}},
                              {"metrics", metrics_json(NAN, NAN, NAN, NAN, NAN, NAN, 0)}};
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(cases.size())));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Richardson ratios between consecutive resolutions of otherwise equal rows.
  std::vector<double> ratio(cases.size(), std::nan(""));
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::optional<std::size_t> coarser;
    for (std::size_t j = 0; j < cases.size(); ++j) {
      const auto& a = cases[i];
      const auto& b = cases[j];
      if (b.k != a.k || b.scheme != a.scheme || b.low_speed != a.low_speed || b.N >= a.N) continue;
      if (!coarser || cases[*coarser].N < b.N) coarser = j;
    }
    if (!coarser) continue;
    const auto& e_fine = results[i].summary["metrics"]["window_error"];
    const auto& e_coarse = results[*coarser].summary["metrics"]["window_error"];
    if (e_fine.is_number() && e_coarse.is_number() && e_fine.get<double>() > 0.0) {
      ratio[i] = e_coarse.get<double>() / e_fine.get<double>();
    }
  }

  Artifacts out;
  std::ostringstream csv;
  csv << "row,digest,N,k,scheme,low_speed,exit_code,status,t_final,window_error,ut_sup_interior,residual_sup,"
         "fit_sup,fit_mean,iterations,richardson_ratio\r\n";
  json rows = json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& sc = cases[i];
    auto& r = results[i];
    char dir[32];
    std::snprintf(dir, sizeof dir, "rows/row_%03zu/", i);
    const std::string digest = config_digest(sc.config);
    r.summary["schema_version"] = kSchemaVersion;
    r.summary["mode"] = to_string(w.base_mode);
    r.summary["config"] = to_json(sc.config);
    r.summary["config_digest"] = digest;
    r.summary["exit_code"] = r.exit_code;
    for (auto& [name, text] : r.files) out.files[dir + name] = std::move(text);
    out.files[std::string(dir) + "summary.json"] = rounded(r.summary).dump(2) + "\n";

    const auto& m = r.summary["metrics"];
    const std::string speed = sc.low_speed >= 0 ? to_string(w.low_speed[static_cast<std::size_t>(sc.low_speed)].kind)
                                                : (sc.config.schedule ? to_string(sc.config.schedule->xi.kind) : "");
    const std::string status = r.summary.value("status", "ok");
    csv << i << ',' << digest << ',' << sc.N << ',' << sc.k << ',' << to_string(sc.scheme) << ',' << speed << ','
        << r.exit_code << ',' << status << ',' << csv_number(m["t_final"]) << ','
        << csv_number(m["window_error"]) << ',' << csv_number(m["ut_sup_interior"]) << ','
        << csv_number(m["residual_sup"]) << ',' << csv_number(m["fit_sup"]) << ',' << csv_number(m["fit_mean"])
        << ',' << m["iterations"].get<int>() << ',' << format_csv_double(ratio[i]) << "\r\n";
    rows.push_back({{"row", i},
                    {"directory", std::string(dir)},
                    {"config_digest", digest},
                    {"N", sc.N},
                    {"k", sc.k},
                    {"scheme", to_string(sc.scheme)},
                    {"low_speed", speed},
                    {"exit_code", r.exit_code},
                    {"status", status},
                    {"metrics", m},
                    {"richardson_ratio", finite_or_null(ratio[i])}});
  }
  out.files["sweep.csv"] = csv.str();
  out.summary["status"] = "ok";
  out.summary["rows"] = rows;
  out.summary["files"] = {{"table", "sweep.csv"}};
  return out;
}

Artifacts dispatch(const Config& c, Mode mode, std::uint64_t seed, int jobs) {
  require_mode_inputs(c, mode);
  switch (mode) {
    case Mode::FlowLn:
    case Mode::FlowDirichlet: return flow_mode(c, mode);
    case Mode::Elliptic: return elliptic_mode(c);
    case Mode::VerifyBarrier: return barrier_mode(c);
    case Mode::CheckCompat: return compat_mode(c);
    case Mode::Sweep: return sweep_mode(c, seed, jobs);
  }
  throw ConfigError("unhandled mode");
}

}  // namespace

Artifacts execute(const Config& config, Mode mode, std::uint64_t seed, int jobs) {
  Config c = config;
  c.mode = mode;
  Artifacts a = dispatch(c, mode, seed, jobs);
  a.summary["schema_version"] = kSchemaVersion;
  a.summary["mode"] = to_string(mode);
  a.summary["build"] = build_stamp();
  a.summary["seed"] = seed;
  a.summary["config"] = to_json(c);
  a.summary["config_digest"] = config_digest(c);
  a.summary["exit_code"] = a.exit_code;
  return a;
}

void write_artifacts(const Artifacts& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : a.files) write_text_file(dir / name, text);
  write_json_file(dir / "summary.json", a.summary);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radial sigma_k-Ricci flow and Loewner-Nirenberg solver"};
  std::string config_path, out_dir, mode_name;
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (default: $SIGMAFLOW_OUT_DIR, then ./out)");
  app.add_option("--mode", mode_name, "flow-ln, flow-dirichlet, elliptic, verify-barrier, check-compat or sweep");
  app.add_option("--seed", seed, "seed recorded in the summary");
  app.add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  if (out_dir.empty()) {
    const char* env = std::getenv("SIGMAFLOW_OUT_DIR");
    out_dir = env && *env ? env : "out";
  }

  Artifacts a;
  Mode mode{};
  try {
    const Config c = load_config(config_path);
    if (!mode_name.empty()) {
      mode = mode_from_string(mode_name);
    } else if (c.mode) {
      mode = *c.mode;
    } else {
      throw ConfigError("no mode given on the command line or in the config");
    }
    a = execute(c, mode, seed, jobs);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const InvalidInput& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    write_artifacts(a, out_dir);
  } catch (const std::exception& e) {
    err << "error writing artifacts: " << e.what() << "\n";
    return kExitSolverError;
  }
  if (a.summary.contains("error")) err << "error: " << a.summary["error"]["message"].get<std::string>() << "\n";
  out << to_string(mode) << ": exit " << a.exit_code << ", artifacts in " << out_dir << "\n";
  return a.exit_code;
}

}  // namespace sigmaflow
