#pragma once

// Damped Newton for the steady equation sigma_k = beta_bar e^{2ku} on a
// radial grid with Dirichlet values at the boundary nodes.

#include <span>
#include <vector>

#include "sigmaflow/geometry.hpp"
#include "sigmaflow/radial_operator.hpp"

namespace sigmaflow {

struct NewtonConfig {
  int max_iters = 60;
  double res_tol = 1e-9;
  double shrink = 0.5;
  /// Smallest line-search step length before giving up.
  double step_floor = 1e-10;

  void validate() const;
};

struct NewtonResult {
  std::vector<double> u;
  int iterations = 0;
  std::vector<double> residual_history;  // sup norm, one entry per iterate
  std::vector<double> step_lengths;
  /// max r_{m+1} / r_m^2 over iterates with r_m < 1e-3 and r_{m+1} above
  /// rounding level (1e-8); 0 when unobserved.
  double kappa_q = 0.0;
};

/// Boundary nodes of u_init carry the Dirichlet data. u_init must be in
/// Gamma_k^+ at every equation node. Throws ConeViolation, or SolverError
/// on iteration cap, stalled line search or a singular Jacobian.
NewtonResult newton_solve(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                          std::span<const double> u_init, const NewtonConfig& cfg = {});

struct ContinuationResult {
  std::vector<double> levels;
  std::vector<NewtonResult> solutions;
  /// ||u_{m+1} - u_m|| over nodes with distance to the boundary in the window.
  std::vector<double> cauchy;
  /// min over nodes and consecutive levels of u_{m+1} - u_m.
  double min_increment = 0.0;
};

/// Solves at each boundary level in turn, warm-started from the previous
/// solution with the new level imposed. Levels must increase strictly.
ContinuationResult continuation_to_ln(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                                      std::span<const double> levels, std::span<const double> u_start,
                                      const NewtonConfig& cfg = {}, double window_lo = 0.1, double window_hi = 0.5);

}  // namespace sigmaflow
