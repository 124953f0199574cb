#include "sigmaflow/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

void NewtonConfig::validate() const {
  if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  if (!(res_tol > 0.0)) throw InvalidInput("res_tol must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidInput("shrink must lie in (0, 1)");
  if (!(step_floor > 0.0 && step_floor < 1.0)) throw InvalidInput("step_floor must lie in (0, 1)");
}

namespace {

// Below this the h^-2 stencils are dominated by rounding.
constexpr double kRoundingFloor = 1e-8;

// sup norm over equation nodes, +inf outside the cone.
double sup_residual(const DiscreteResidual& r, const RadialGrid& grid) {
  if (!r.cone_ok()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (!grid.is_boundary(i)) m = std::max(m, std::abs(r.value[static_cast<std::size_t>(i)]));
  }
  return m;
}

}  // namespace

NewtonResult newton_solve(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                          std::span<const double> u_init, const NewtonConfig& cfg) {
  cfg.validate();
  if (u_init.size() != grid.nodes.size()) throw InvalidInput("initial iterate does not match the grid");
  NewtonResult out;
  out.u.assign(u_init.begin(), u_init.end());
  auto res = discrete_residual(geom, k, grid, out.u);
  if (!res.cone_ok()) throw ConeViolation("initial iterate outside Gamma_k^+", res.worst_node);
  double r = sup_residual(res, grid);
  out.residual_history.push_back(r);
  const std::size_t m = out.u.size();
  std::vector<double> rhs(m), trial(m);
  while (r > cfg.res_tol) {
    if (out.iterations >= cfg.max_iters) {
      std::ostringstream msg;
      msg << "Newton iteration cap reached with residual " << r;
      throw SolverError(SolverError::Kind::IterationCap, msg.str());
    }
    const Tridiagonal J = residual_jacobian(geom, k, grid, out.u);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = grid.is_boundary(static_cast<int>(i)) ? 0.0 : -res.value[i];
    const auto delta = solve(J, rhs);
    double alpha = 1.0;
    for (;;) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = out.u[i] + alpha * delta[i];
      auto tr = discrete_residual(geom, k, grid, trial);
      const double rt = sup_residual(tr, grid);
      if (rt < r) {
        out.u.swap(trial);
        res = std::move(tr);
        r = rt;
        break;
      }
      alpha *= cfg.shrink;
      if (alpha < cfg.step_floor) {
        std::ostringstream msg;
        msg << "line search stalled at residual " << r << " after " << out.iterations << " iterations";
        throw SolverError(SolverError::Kind::LineSearchStall, msg.str());
      }
    }
    ++out.iterations;
    out.step_lengths.push_back(alpha);
    const double prev = out.residual_history.back();
    out.residual_history.push_back(r);
    if (prev < 1e-3 && r > kRoundingFloor) out.kappa_q = std::max(out.kappa_q, r / (prev * prev));
  }
  return out;
}

ContinuationResult continuation_to_ln(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                                      std::span<const double> levels, std::span<const double> u_start,
                                      const NewtonConfig& cfg, double window_lo, double window_hi) {
  if (levels.empty()) throw InvalidInput("continuation needs at least one level");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw InvalidInput("continuation levels must increase strictly");
  }
  ContinuationResult out;
  out.levels.assign(levels.begin(), levels.end());
  out.min_increment = std::numeric_limits<double>::infinity();
  std::vector<double> u(u_start.begin(), u_start.end());
  for (double level : levels) {
    for (int b : grid.boundary_index) u[static_cast<std::size_t>(b)] = level;
    out.solutions.push_back(newton_solve(geom, k, grid, u, cfg));
    u = out.solutions.back().u;
    if (out.solutions.size() < 2) continue;
    const auto& prev = out.solutions[out.solutions.size() - 2].u;
    double diff = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      out.min_increment = std::min(out.min_increment, u[ui] - prev[ui]);
      const double d = geom.distance_to_boundary(grid.nodes[ui]);
      if (d >= window_lo - 1e-12 && d <= window_hi + 1e-12) diff = std::max(diff, std::abs(u[ui] - prev[ui]));
    }
    out.cauchy.push_back(diff);
  }
  return out;
}

}  // namespace sigmaflow
