#pragma once

// Radial reduction of the conformal tensor
//   -Ric_g + (n-2) Hess u + (Lap u) g + (n-2)(|du|^2 g - du (x) du)
// on rotationally symmetric space-form domains.

#include <variant>
#include <vector>

#include "sigmaflow/symfun.hpp"

namespace sigmaflow {

enum class Curvature { Flat, Hyperbolic };

struct Ball {
  double b = 1.0;
};

struct Annulus {
  double a = 0.5;
  double b = 1.0;
};

using Domain = std::variant<Ball, Annulus>;

struct BackgroundGeometry {
  int n = 3;
  Curvature curvature = Curvature::Flat;
  Domain domain = Ball{};

  /// Validates n >= 3 and the domain radii; throws InvalidInput.
  BackgroundGeometry(int n, Curvature curvature, Domain domain);

  double kappa() const noexcept { return curvature == Curvature::Hyperbolic ? -1.0 : 0.0; }
  bool center_regularity() const noexcept { return std::holds_alternative<Ball>(domain); }
  double inner_radius() const noexcept;
  double outer_radius() const noexcept;
  /// Radii of the boundary components (one for a ball, two for an annulus).
  std::vector<double> boundary_radii() const;
  /// Distance from radius r to the nearest boundary component.
  double distance_to_boundary(double r) const noexcept;
};

/// Uniform radial grid. For a ball nodes[0] = 0 carries the symmetry
/// condition u'(0) = 0; for an annulus nodes[0] = a.
struct RadialGrid {
  std::vector<double> nodes;
  double h = 0.0;
  bool has_center = false;
  std::vector<int> boundary_index;

  int size() const noexcept { return static_cast<int>(nodes.size()); }
  int last() const noexcept { return size() - 1; }
  bool is_boundary(int i) const noexcept;
};

/// N intervals, N >= 8.
RadialGrid make_grid(const BackgroundGeometry& geom, int intervals);

/// Value and first two radial derivatives of a radial function at a point.
struct Jet {
  double u = 0.0;
  double du = 0.0;
  double ddu = 0.0;
};

/// (n-1)^k C(n,k), sigma_k of (n-1) Id.
double beta_bar(int k, int n);

/// sn'/sn of the space form: 1/r (flat) or coth r (hyperbolic). At the ball
/// center returns +infinity; callers use the limit u'/r -> u''. r = 0 without
/// center regularity throws SingularityError.
double mean_curvature_factor(const BackgroundGeometry& geom, double r);

/// Radial and tangential eigenvalues of the conformal tensor for a radial
/// function with the given jet at radius r. At r = 0 the jet must have du = 0.
RadialEigen barnabla_eigen(const BackgroundGeometry& geom, double r, const Jet& jet);

/// log sigma_k - log beta_bar - 2 k u, or a cone-violation tag.
struct PointResidual {
  double value = 0.0;
  bool cone_ok = false;
  RadialEigen eigen;
};

PointResidual residual(const BackgroundGeometry& geom, int k, double r, const Jet& jet);

/// Partial derivatives of the pointwise residual with respect to the jet
/// components (u, du, ddu). Requires the eigenvalues to lie in Gamma_k^+.
struct JetSensitivity {
  double d_u = 0.0;
  double d_du = 0.0;
  double d_ddu = 0.0;
};

JetSensitivity residual_sensitivity(const BackgroundGeometry& geom, int k, double r, const Jet& jet);

}  // namespace sigmaflow
