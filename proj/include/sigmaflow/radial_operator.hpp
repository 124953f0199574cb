#pragma once

// Second-order finite-difference discretization of the pointwise residual on
// a radial grid, shared by the flow, the elliptic solver and the
// compatibility operator. Boundary nodes are Dirichlet and carry no equation.

#include <span>
#include <vector>

#include "sigmaflow/geometry.hpp"

namespace sigmaflow {

/// Central-difference jet at a non-boundary node; even extension at a ball center.
Jet node_jet(const RadialGrid& grid, std::span<const double> u, int i);

struct DiscreteResidual {
  /// Residual per node; NaN at boundary nodes and cone violations.
  std::vector<double> value;
  std::vector<RadialEigen> eigen;
  /// First node outside Gamma_k^+, or -1.
  int worst_node = -1;
  /// min over equation nodes of relative_cone_margin.
  double cone_margin = 1.0;

  bool cone_ok() const noexcept { return worst_node < 0; }
};

DiscreteResidual discrete_residual(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                                   std::span<const double> u);

/// Tridiagonal matrix; row i couples unknowns i-1, i, i+1.
struct Tridiagonal {
  std::vector<double> lower;  // lower[i] multiplies x[i-1]; lower[0] unused
  std::vector<double> diag;
  std::vector<double> upper;  // upper[i] multiplies x[i+1]; upper.back() unused

  explicit Tridiagonal(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
  std::size_t size() const noexcept { return diag.size(); }
  std::vector<double> apply(std::span<const double> x) const;
};

/// Thomas algorithm. Throws SolverError(SingularJacobian) on a vanishing pivot.
std::vector<double> solve(const Tridiagonal& m, std::span<const double> rhs);

/// Exact Jacobian of discrete_residual with respect to the node values.
/// Boundary rows are identity rows. Throws ConeViolation outside the cone.
Tridiagonal residual_jacobian(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                              std::span<const double> u);

}  // namespace sigmaflow
