#include "sigmaflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double time_eps(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::ExplicitRK2 ? "explicit_rk2" : "semi_implicit"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "explicit_rk2") return Scheme::ExplicitRK2;
  if (s == "semi_implicit") return Scheme::SemiImplicit;
  throw InvalidInput("unknown scheme '" + s + "'");
}

std::string to_string(Termination t) { return t == Termination::Converged ? "converged" : "horizon"; }

void RunConfig::validate() const {
  if (k < 1) throw InvalidInput("k must be >= 1");
  if (N < 16) throw InvalidInput("N must be >= 16");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw InvalidInput("dt_safety must lie in (0, 1]");
  if (!(implicit_dt_multiple >= 1.0)) throw InvalidInput("implicit_dt_multiple must be >= 1");
  if (!(t_max > 0.0)) throw InvalidInput("t_max must be positive");
  if (mono_tol < 0.0 || ub_tol < 0.0) throw InvalidInput("tolerances must be nonnegative");
  if (!(ut_tol > 0.0) || !(res_tol > 0.0)) throw InvalidInput("convergence thresholds must be positive");
  if (rho_cells < 0) throw InvalidInput("rho_cells must be nonnegative");
  if (retry_max < 0) throw InvalidInput("retry_max must be nonnegative");
  if (!(dt_floor > 0.0)) throw InvalidInput("dt_floor must be positive");
  if (!(series_interval > 0.0)) throw InvalidInput("series_interval must be positive");
  for (double s : snapshot_times) {
    if (s < 0.0) throw InvalidInput("snapshot times must be nonnegative");
  }
}

std::vector<bool> interior_window(const BackgroundGeometry& geom, const RadialGrid& grid, int rho_cells) {
  std::vector<bool> mask(grid.nodes.size(), false);
  const double rho = rho_cells * grid.h * (1.0 - 1e-9);
  for (int i = 0; i < grid.size(); ++i) {
    mask[static_cast<std::size_t>(i)] =
        !grid.is_boundary(i) && geom.distance_to_boundary(grid.nodes[static_cast<std::size_t>(i)]) >= rho;
  }
  return mask;
}

int rhs(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::span<const double> u,
        const BoundarySchedule& sched, double t, std::span<double> out) {
  const double lb = std::log(beta_bar(k, geom.n));
  const double inv2k = 0.5 / k;
  for (int i = 0; i < grid.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (grid.is_boundary(i)) {
      out[ui] = sched.at_radius(grid.nodes[ui]).eval(t).d1;
      continue;
    }
    const Jet j = node_jet(grid, u, i);
    const RadialEigen lam = barnabla_eigen(geom, grid.nodes[ui], j);
    if (!in_gamma_k_plus(lam, k)) return i;
    out[ui] = inv2k * (std::log(sigma_k(lam, k)) - lb - 2.0 * k * j.u);
  }
  return -1;
}

double max_diffusion(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::span<const double> u) {
  const int n = geom.n;
  double d_max = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary(i)) continue;
    const auto ui = static_cast<std::size_t>(i);
    const RadialEigen lam = barnabla_eigen(geom, grid.nodes[ui], node_jet(grid, u, i));
    if (!in_gamma_k_plus(lam, k)) {
      throw SolverError(SolverError::Kind::InvalidState, "diffusion requested outside the cone at node " +
                                                             std::to_string(i));
    }
    const RadialNewton rn = radial_newton(lam, k);
    const double tr = rn.t_rad + (n - 1) * rn.t_tan;
    double d = std::max((n - 2) * rn.t_rad + tr, (n - 2) * rn.t_tan + tr) / rn.sigma;
    if (i == 0 && grid.has_center) d *= n;
    d_max = std::max(d_max, d);
  }
  if (!std::isfinite(d_max) || !(d_max > 0.0)) {
    throw SolverError(SolverError::Kind::InvalidState, "non-finite diffusion coefficient");
  }
  return d_max;
}

double dt_from_diffusion(double h, int k, double d_max, double dt_safety) {
  return dt_safety * h * h / (2.0 * d_max / (2.0 * k));
}

double stable_dt(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::span<const double> u,
                 double dt_safety) {
  return dt_from_diffusion(grid.h, k, max_diffusion(geom, k, grid, u), dt_safety);
}

void refresh_state(const BackgroundGeometry& geom, const RadialGrid& grid, const BoundarySchedule& sched, int k,
                   int rho_cells, FlowState& s) {
  const auto res = discrete_residual(geom, k, grid, s.u);
  s.residual = res.value;
  s.eigen = res.eigen;
  s.cone_margin = res.cone_margin;
  s.u_t.assign(s.u.size(), 0.0);
  if (rhs(geom, k, grid, s.u, sched, s.t, s.u_t) >= 0) {
    throw SolverError(SolverError::Kind::InvalidState, "state outside the cone");
  }
  const auto mask = interior_window(geom, grid, rho_cells);
  s.residual_sup = s.ut_sup_interior = s.grad_sup = s.hess_sup = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!mask[ui]) continue;
    const Jet j = node_jet(grid, s.u, i);
    s.residual_sup = std::max(s.residual_sup, std::abs(s.residual[ui]));
    s.ut_sup_interior = std::max(s.ut_sup_interior, std::abs(s.u_t[ui]));
    s.grad_sup = std::max(s.grad_sup, std::abs(j.du));
    s.hess_sup = std::max(s.hess_sup, std::abs(j.ddu));
  }
}

// ---------------------------------------------------------------------------
// Stepper

Stepper::Stepper(const BackgroundGeometry& geom, RadialGrid grid, RunConfig cfg, BoundarySchedule sched,
                 std::vector<double> u0, double t0)
    : geom_(&geom), grid_(std::move(grid)), cfg_(std::move(cfg)), sched_(std::move(sched)) {
  if (u0.size() != grid_.nodes.size()) throw InvalidInput("initial datum does not match the grid");
  state_.t = t0;
  state_.u = std::move(u0);
  for (int b : grid_.boundary_index) {
    const auto ub = static_cast<std::size_t>(b);
    state_.u[ub] = sched_.at_radius(grid_.nodes[ub]).eval(t0).value;
  }
  const auto bad = discrete_residual(geom, cfg_.k, grid_, state_.u).worst_node;
  if (bad >= 0) throw ConeViolation("initial datum outside Gamma_k^+ on the grid", bad);
  refresh_state(geom, grid_, sched_, cfg_.k, cfg_.rho_cells, state_);
  f0_.assign(state_.u.size(), 0.0);
  f1_ = f0_;
  u1_ = f0_;
  window_ = interior_window(geom, grid_, cfg_.rho_cells);
}

double Stepper::suggested_dt() const {
  const double dt = stable_dt(*geom_, cfg_.k, grid_, state_.u, cfg_.dt_safety);
  return cfg_.scheme == Scheme::SemiImplicit ? dt * cfg_.implicit_dt_multiple : dt;
}

bool Stepper::stage(std::span<const double> u, double t, std::span<double> f) {
  return rhs(*geom_, cfg_.k, grid_, u, sched_, t, f) < 0;
}

bool Stepper::try_step(double dt) {
  const double t1 = state_.t + dt;
  const auto& u = state_.u;
  const std::size_t m = u.size();
  if (cfg_.scheme == Scheme::ExplicitRK2) {
    // Heun: two forward-Euler stages averaged.
    for (std::size_t i = 0; i < m; ++i) u1_[i] = u[i] + dt * state_.u_t[i];
    for (int b : grid_.boundary_index) {
      u1_[static_cast<std::size_t>(b)] = sched_.at_radius(grid_.nodes[static_cast<std::size_t>(b)]).eval(t1).value;
    }
    if (!stage(u1_, t1, f1_)) return false;
    for (std::size_t i = 0; i < m; ++i) u1_[i] = 0.5 * (u[i] + u1_[i] + dt * f1_[i]);
  } else {
    Tridiagonal M = residual_jacobian(*geom_, cfg_.k, grid_, u);
    const double c = dt / (2.0 * cfg_.k);
    std::vector<double> b(m);
    for (std::size_t i = 0; i < m; ++i) {
      const int ii = static_cast<int>(i);
      if (grid_.is_boundary(ii)) {
        M.lower[i] = M.upper[i] = 0.0;
        M.diag[i] = 1.0;
        b[i] = sched_.at_radius(grid_.nodes[i]).eval(t1).value - u[i];
      } else {
        M.lower[i] *= -c;
        M.upper[i] *= -c;
        M.diag[i] = 1.0 - c * M.diag[i];
        b[i] = dt * state_.u_t[i];
      }
    }
    std::vector<double> delta;
    try {
      delta = solve(M, b);
    } catch (const SolverError&) {
      return false;
    }
    for (std::size_t i = 0; i < m; ++i) u1_[i] = u[i] + delta[i];
  }
  for (int b : grid_.boundary_index) {
    u1_[static_cast<std::size_t>(b)] = sched_.at_radius(grid_.nodes[static_cast<std::size_t>(b)]).eval(t1).value;
  }
  if (!stage(u1_, t1, f0_)) return false;
  state_.u.swap(u1_);
  state_.u_t.swap(f0_);
  state_.t = t1;
  state_.ut_sup_interior = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (window_[i]) state_.ut_sup_interior = std::max(state_.ut_sup_interior, std::abs(state_.u_t[i]));
  }
  ++steps_;
  return true;
}

double Stepper::step(double dt) {
  for (int attempt = 0; attempt <= cfg_.retry_max; ++attempt) {
    if (dt < cfg_.dt_floor) break;
    if (try_step(dt)) return dt;
    ++rejections_;
    dt *= 0.5;
  }
  throw SolverError(SolverError::Kind::ConeCollapse,
                    "step size fell below dt_floor at t = " + std::to_string(state_.t) + " (cone exit)");
}

// ---------------------------------------------------------------------------
// Recording

namespace {

double sampled_max_slope(const BoundarySchedule& sched, double t_max) {
  double m = 0.0;
  constexpr int samples = 20001;
  for (const auto& c : sched.components) {
    for (int j = 0; j < samples; ++j) m = std::max(m, c.eval(t_max * j / (samples - 1)).d1);
  }
  return m;
}

class Recorder {
 public:
  Recorder(const BackgroundGeometry& geom, const RunConfig& cfg, std::vector<double> u0, const Stepper& s)
      : geom_(geom), cfg_(cfg), u0_(std::move(u0)), snaps_(cfg.snapshot_times) {
    std::sort(snaps_.begin(), snaps_.end());
    const auto& grid = s.grid();
    if (cfg.upper_envelope) upper_ = sample(*cfg.upper_envelope, grid);
    double v_sup = -std::numeric_limits<double>::infinity();
    double v_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.size(); ++i) {
      if (grid.is_boundary(i)) continue;
      v_sup = std::max(v_sup, s.state().u_t[static_cast<std::size_t>(i)]);
      v_min = std::min(v_min, s.state().u_t[static_cast<std::size_t>(i)]);
    }
    const double slope_min = s.schedule().min_slope(cfg.t_max);
    mon_.monotone_run = v_min >= -cfg.mono_tol && slope_min >= 0.0;
    mon_.ut_upper_bound = std::max(v_sup, sampled_max_slope(s.schedule(), cfg.t_max));
    mon_.min_ut = std::numeric_limits<double>::infinity();
    mon_.max_ut_interior = -std::numeric_limits<double>::infinity();
    mon_.min_above_initial = std::numeric_limits<double>::infinity();
    mon_.max_above_envelope = -std::numeric_limits<double>::infinity();
    observe(s);
    record(s, true);
  }

  /// Cheap per-step monitors.
  void observe(const Stepper& s) {
    const auto& st = s.state();
    const auto& grid = s.grid();
    for (int i = 0; i < grid.size(); ++i) {
      const double ut = st.u_t[static_cast<std::size_t>(i)];
      mon_.min_ut = std::min(mon_.min_ut, ut);
      if (!grid.is_boundary(i)) {
        mon_.max_ut_interior = std::max(mon_.max_ut_interior, ut);
      } else {
        mon_.ut_upper_bound = std::max(mon_.ut_upper_bound, ut);
      }
    }
    mon_.ut_bound_ok = mon_.max_ut_interior <= mon_.ut_upper_bound + cfg_.ub_tol;
    if (mon_.monotone_run && cfg_.halt_on_nonmonotone && mon_.min_ut < -cfg_.mono_tol) {
      throw SolverError(SolverError::Kind::NonMonotone,
                        "u_t = " + std::to_string(mon_.min_ut) + " < -mono_tol at t = " + std::to_string(st.t));
    }
  }

  /// Series row, sandwich and snapshots when due.
  void record(const Stepper& s, bool force = false) {
    const double t = s.state().t;
    const bool series_due = force || t + time_eps(t) >= next_series_;
    const bool snap_due = next_snap_ < snaps_.size() && t + time_eps(t) >= snaps_[next_snap_];
    if (!series_due && !snap_due) return;
    FlowState st = s.state();
    refresh_state(geom_, s.grid(), s.schedule(), cfg_.k, cfg_.rho_cells, st);
    if (series_due) {
      if (series_.empty() || series_.back().t < t) {
        series_.push_back({t, st.ut_sup_interior, st.residual_sup, st.cone_margin, st.grad_sup, st.hess_sup});
      }
      while (next_series_ <= t + time_eps(t)) next_series_ += cfg_.series_interval;
      sandwich(s.grid(), st);
    }
    while (next_snap_ < snaps_.size() && t + time_eps(t) >= snaps_[next_snap_]) {
      if (snapshots_.empty() || snapshots_.back().state.t < t) snapshots_.push_back({st});
      ++next_snap_;
    }
  }

  double next_snapshot_time() const {
    return next_snap_ < snaps_.size() ? snaps_[next_snap_] : std::numeric_limits<double>::infinity();
  }

  RunResult finish(const Stepper& s, Termination term) {
    record(s, true);
    RunResult out;
    out.final_state = s.state();
    refresh_state(geom_, s.grid(), s.schedule(), cfg_.k, cfg_.rho_cells, out.final_state);
    if (snapshots_.empty() || snapshots_.back().state.t < out.final_state.t) snapshots_.push_back({out.final_state});
    out.series = std::move(series_);
    out.snapshots = std::move(snapshots_);
    out.termination = term;
    out.steps = s.steps();
    out.rejections = s.rejections();
    mon_.residual_ripple = ripple(out.series);
    out.monitors = mon_;
    return out;
  }

 private:
  void sandwich(const RadialGrid& grid, const FlowState& st) {
    for (int i = 0; i < grid.size(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      mon_.min_above_initial = std::min(mon_.min_above_initial, st.u[ui] - u0_[ui]);
      if (!upper_.empty() && !grid.is_boundary(i)) {
        mon_.max_above_envelope = std::max(mon_.max_above_envelope, st.u[ui] - upper_[ui]);
      }
    }
    mon_.sandwich_ok = mon_.min_above_initial >= -cfg_.mono_tol &&
                       (upper_.empty() || mon_.max_above_envelope <= cfg_.sandwich_tol);
  }

  static double ripple(const std::vector<SeriesRow>& rows) {
    if (rows.size() < 3) return 0.0;
    const double t_start = 0.2 * rows.back().t;
    double run_min = std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto& r : rows) {
      if (r.t < t_start) continue;
      if (run_min < std::numeric_limits<double>::infinity() && run_min > 0.0) {
        worst = std::max(worst, r.residual_sup / run_min - 1.0);
      }
      run_min = std::min(run_min, r.residual_sup);
    }
    return worst;
  }

  const BackgroundGeometry& geom_;
  const RunConfig& cfg_;
  std::vector<double> u0_;
  std::vector<double> upper_;
  std::vector<double> snaps_;
  std::size_t next_snap_ = 0;
  double next_series_ = 0.0;
  std::vector<SeriesRow> series_;
  std::vector<Snapshot> snapshots_;
  Monitors mon_;
};

void require_compatible(const RadialProfile& u0, const BoundarySchedule& sched, const RadialGrid& grid,
                        const BackgroundGeometry& geom, int k) {
  const auto rep = check_compatibility(u0, sched, grid, geom, k);
  for (const auto& l : rep.lines) {
    if (!l.value_ok || !l.slope_ok || !l.curvature_ok || l.clause14 == CompatibilityLine::Clause::Fail) {
      throw ConstructionError("schedule is not compatible with the initial datum at r = " + std::to_string(l.radius) +
                              " (value gap " + std::to_string(l.value_gap) + ", slope gap " +
                              std::to_string(l.slope_gap) + ", curvature gap " + std::to_string(l.curvature_gap) + ")");
    }
  }
}

}  // namespace

RunResult run(const BackgroundGeometry& geom, const RunConfig& cfg, const RadialProfile& u0,
              const BoundarySchedule& sched, const StepObserver& observer) {
  cfg.validate();
  const RadialGrid grid = make_grid(geom, cfg.N);
  require_compatible(u0, sched, grid, geom, cfg.k);
  auto u0v = sample(u0, grid);
  Stepper stepper(geom, grid, cfg, sched, u0v);
  Recorder rec(geom, cfg, u0v, stepper);
  if (observer) observer(stepper);
  Termination term = Termination::Horizon;
  while (stepper.state().t < cfg.t_max - time_eps(cfg.t_max)) {
    const double t = stepper.state().t;
    double dt = std::min(stepper.suggested_dt(), cfg.t_max - t);
    const double ts = rec.next_snapshot_time();
    if (ts > t + time_eps(t)) dt = std::min(dt, ts - t);
    stepper.step(dt);
    rec.observe(stepper);
    if (observer) observer(stepper);
    rec.record(stepper);
    if (!cfg.run_to_horizon && stepper.state().ut_sup_interior < cfg.ut_tol) {
      FlowState st = stepper.state();
      refresh_state(geom, stepper.grid(), sched, cfg.k, cfg.rho_cells, st);
      if (st.ut_sup_interior < cfg.ut_tol && st.residual_sup < cfg.res_tol) {
        term = Termination::Converged;
        break;
      }
    }
  }
  return rec.finish(stepper, term);
}

PairedResult run_paired(const BackgroundGeometry& geom, const RunConfig& cfg, const RadialProfile& u0_a,
                        const BoundarySchedule& sched_a, const RadialProfile& u0_b,
                        const BoundarySchedule& sched_b) {
  cfg.validate();
  const RadialGrid grid = make_grid(geom, cfg.N);
  require_compatible(u0_a, sched_a, grid, geom, cfg.k);
  require_compatible(u0_b, sched_b, grid, geom, cfg.k);
  RunConfig pc = cfg;
  pc.run_to_horizon = true;
  auto ua = sample(u0_a, grid);
  auto ub = sample(u0_b, grid);
  Stepper a(geom, grid, pc, sched_a, ua);
  Stepper b(geom, grid, pc, sched_b, ub);
  Recorder ra(geom, pc, ua, a);
  Recorder rb(geom, pc, ub, b);
  PairedResult out;
  out.max_gap = -std::numeric_limits<double>::infinity();
  auto gap = [&] {
    for (std::size_t i = 0; i < a.state().u.size(); ++i) {
      const double g = a.state().u[i] - b.state().u[i];
      if (g > out.max_gap) {
        out.max_gap = g;
        out.t_at_max = a.state().t;
      }
    }
  };
  gap();
  while (a.state().t < pc.t_max - time_eps(pc.t_max)) {
    double dt = std::min({a.suggested_dt(), b.suggested_dt(), pc.t_max - a.state().t});
    for (int attempt = 0;; ++attempt) {
      if (attempt > pc.retry_max || dt < pc.dt_floor) {
        throw SolverError(SolverError::Kind::ConeCollapse, "paired step size fell below dt_floor");
      }
      Stepper na = a, nb = b;
      if (na.try_step(dt) && nb.try_step(dt)) {
        a = std::move(na);
        b = std::move(nb);
        break;
      }
      dt *= 0.5;
    }
    ra.observe(a);
    rb.observe(b);
    ra.record(a);
    rb.record(b);
    gap();
  }
  out.a = ra.finish(a, Termination::Horizon);
  out.b = rb.finish(b, Termination::Horizon);
  return out;
}

AsymptoticFit ln_asymptotic_fit(const RadialGrid& grid, std::span<const double> u, const BackgroundGeometry& geom,
                                double d_lo, double d_hi) {
  if (!(d_lo > 0.0) || !(d_hi >= d_lo)) throw InvalidInput("asymptotic window needs 0 < d_lo <= d_hi");
  AsymptoticFit fit;
  fit.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  const double slack = 1e-9 * grid.h;
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary(i)) continue;
    const double d = geom.distance_to_boundary(grid.nodes[static_cast<std::size_t>(i)]);
    if (d < d_lo - slack || d > d_hi + slack) continue;
    const double e = std::abs(u[static_cast<std::size_t>(i)] + std::log(d));
    fit.sup = std::max(fit.sup, e);
    fit.min = std::min(fit.min, e);
    sum += e;
    ++fit.nodes;
  }
  if (fit.nodes == 0) throw InvalidInput("asymptotic window contains no grid nodes");
  fit.mean = sum / fit.nodes;
  return fit;
}

}  // namespace sigmaflow
