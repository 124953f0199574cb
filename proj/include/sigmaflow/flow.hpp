#pragma once

// Method-of-lines integration of
//   2k u_t = log sigma_k(conformal tensor of u) - log beta_bar - 2k u
// on a radial grid with Dirichlet data phi(t) on every boundary component.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigmaflow/geometry.hpp"
#include "sigmaflow/profile.hpp"
#include "sigmaflow/radial_operator.hpp"
#include "sigmaflow/schedules.hpp"

namespace sigmaflow {

enum class Scheme { ExplicitRK2, SemiImplicit };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct FlowState {
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> u_t;       // phi_t at boundary nodes
  std::vector<double> residual;  // NaN at boundary nodes
  std::vector<RadialEigen> eigen;
  double cone_margin = 0.0;
  double residual_sup = 0.0;     // interior window
  double ut_sup_interior = 0.0;  // max |u_t| on the interior window
  double grad_sup = 0.0;
  double hess_sup = 0.0;
};

struct RunConfig {
  int k = 1;
  int N = 200;
  Scheme scheme = Scheme::ExplicitRK2;
  double dt_safety = 0.3;
  /// Semi-implicit steps are this multiple of the explicit stable step.
  double implicit_dt_multiple = 10.0;
  double t_max = 20.0;
  double mono_tol = 1e-8;
  double ub_tol = 1e-8;
  double ut_tol = 1e-4;
  double res_tol = 1e-3;
  /// Interior window: nodes at distance >= rho_cells * h from the boundary.
  int rho_cells = 8;
  int retry_max = 40;
  double dt_floor = 1e-14;
  /// Stop at t_max only, ignoring the convergence test.
  bool run_to_horizon = false;
  /// Halt with SolverError(NonMonotone) when a monotone run sees u_t < -mono_tol.
  bool halt_on_nonmonotone = true;
  double series_interval = 0.1;
  std::vector<double> snapshot_times;
  /// Optional upper envelope for the sandwich monitor (the exact LN profile).
  std::optional<RadialProfile> upper_envelope;
  double sandwich_tol = 1e-2;

  /// Throws InvalidInput on out-of-range fields.
  void validate() const;
};

/// Interior right-hand side; boundary entries carry phi_t(t). Returns the
/// first node outside Gamma_k^+ (or -1); then `out` is unspecified.
int rhs(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::span<const double> u,
        const BoundarySchedule& sched, double t, std::span<double> out);

/// max over equation nodes of the diagonal of
/// Qbar = ((n-2) T_{k-1} + tr(T_{k-1}) g) / sigma_k; at a ball center the
/// even-extension stencil is n times stiffer and the entry is scaled by n.
double max_diffusion(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::span<const double> u);

/// dt_safety h^2 / (2 D_max / 2k).
double dt_from_diffusion(double h, int k, double d_max, double dt_safety);

double stable_dt(const BackgroundGeometry& geom, int k, const RadialGrid& grid, std::span<const double> u,
                 double dt_safety);

/// Fills every diagnostic field of a state from t and u.
void refresh_state(const BackgroundGeometry& geom, const RadialGrid& grid, const BoundarySchedule& sched, int k,
                   int rho_cells, FlowState& s);

/// One integrator bound to a geometry, grid and schedule.
class Stepper {
 public:
  Stepper(const BackgroundGeometry& geom, RadialGrid grid, RunConfig cfg, BoundarySchedule sched,
          std::vector<double> u0, double t0 = 0.0);

  /// t, u, u_t and ut_sup_interior track every step; the remaining
  /// diagnostics are filled by refresh_state on demand.
  const FlowState& state() const noexcept { return state_; }
  const RadialGrid& grid() const noexcept { return grid_; }
  const RunConfig& config() const noexcept { return cfg_; }
  const BoundarySchedule& schedule() const noexcept { return sched_; }

  /// Step size suggested by the stability contract for the current state.
  double suggested_dt() const;
  /// Attempts one step of size dt; commits and returns true unless a stage
  /// leaves the cone.
  bool try_step(double dt);
  /// Steps with dt, halving on cone exits up to retry_max times. Returns the
  /// dt actually used. Throws SolverError(ConeCollapse) below dt_floor.
  double step(double dt);

  int rejections() const noexcept { return rejections_; }
  long steps() const noexcept { return steps_; }

 private:
  bool stage(std::span<const double> u, double t, std::span<double> f);

  const BackgroundGeometry* geom_;
  RadialGrid grid_;
  RunConfig cfg_;
  BoundarySchedule sched_;
  FlowState state_;
  std::vector<double> f0_, f1_, u1_;
  std::vector<bool> window_;
  int rejections_ = 0;
  long steps_ = 0;
};

struct SeriesRow {
  double t = 0.0;
  double ut_sup_interior = 0.0;
  double residual_sup = 0.0;
  double cone_margin = 0.0;
  double grad_sup = 0.0;
  double hess_sup = 0.0;
};

struct Snapshot {
  FlowState state;
};

struct Monitors {
  bool monotone_run = false;
  double min_ut = 0.0;               // over all accepted states and nodes
  double max_ut_interior = 0.0;      // over accepted states, non-boundary nodes
  double ut_upper_bound = 0.0;       // max(sup v, sup phi_t)
  bool ut_bound_ok = true;
  double max_above_envelope = 0.0;   // max(u - upper) over recorded states, non-boundary nodes
  double min_above_initial = 0.0;    // min(u - u0) over recorded states
  bool sandwich_ok = true;
  double residual_ripple = 0.0;      // largest relative rise of residual_sup after the transient
};

enum class Termination { Converged, Horizon };
std::string to_string(Termination t);

struct RunResult {
  FlowState final_state;
  std::vector<SeriesRow> series;
  std::vector<Snapshot> snapshots;
  Monitors monitors;
  Termination termination = Termination::Horizon;
  long steps = 0;
  int rejections = 0;
};

/// Called after every accepted step.
using StepObserver = std::function<void(const Stepper&)>;

RunResult run(const BackgroundGeometry& geom, const RunConfig& cfg, const RadialProfile& u0,
              const BoundarySchedule& sched, const StepObserver& observer = {});

struct PairedResult {
  RunResult a;
  RunResult b;
  double max_gap = 0.0;  // max over steps and nodes of u^a - u^b
  double t_at_max = 0.0;
};

/// Runs two flows in lockstep with a common step, the smaller of the two
/// suggested steps, and records max(u^a - u^b).
PairedResult run_paired(const BackgroundGeometry& geom, const RunConfig& cfg, const RadialProfile& u0_a,
                        const BoundarySchedule& sched_a, const RadialProfile& u0_b,
                        const BoundarySchedule& sched_b);

struct AsymptoticFit {
  double min = 0.0;
  double sup = 0.0;
  double mean = 0.0;
  int nodes = 0;
};

/// Statistics of |u + log(dist to the boundary)| over nodes whose distance
/// lies in [d_lo, d_hi]. Throws InvalidInput on an empty window.
AsymptoticFit ln_asymptotic_fit(const RadialGrid& grid, std::span<const double> u, const BackgroundGeometry& geom,
                                double d_lo, double d_hi);

/// Interior window mask: non-boundary nodes at distance >= rho_cells h.
std::vector<bool> interior_window(const BackgroundGeometry& geom, const RadialGrid& grid, int rho_cells);

}  // namespace sigmaflow
