#include "sigmaflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

BackgroundGeometry::BackgroundGeometry(int n_, Curvature c, Domain d)
    : n(n_), curvature(c), domain(d) {
  if (n < 3) throw InvalidInput("dimension must be >= 3, got " + std::to_string(n));
  if (const auto* ball = std::get_if<Ball>(&domain)) {
    if (!(ball->b > 0.0) || !std::isfinite(ball->b)) throw InvalidInput("ball radius must be positive");
  } else {
    const auto& ann = std::get<Annulus>(domain);
    if (!(ann.a > 0.0) || !(ann.b > ann.a) || !std::isfinite(ann.b)) {
      throw InvalidInput("annulus needs 0 < a < b");
    }
  }
}

double BackgroundGeometry::inner_radius() const noexcept {
  if (const auto* ann = std::get_if<Annulus>(&domain)) return ann->a;
  return 0.0;
}

double BackgroundGeometry::outer_radius() const noexcept {
  if (const auto* ann = std::get_if<Annulus>(&domain)) return ann->b;
  return std::get<Ball>(domain).b;
}

std::vector<double> BackgroundGeometry::boundary_radii() const {
  if (center_regularity()) return {outer_radius()};
  return {inner_radius(), outer_radius()};
}

double BackgroundGeometry::distance_to_boundary(double r) const noexcept {
  const double outer = outer_radius() - r;
  if (center_regularity()) return outer;
  return std::min(outer, r - inner_radius());
}

bool RadialGrid::is_boundary(int i) const noexcept {
  for (int b : boundary_index) {
    if (b == i) return true;
  }
  return false;
}

RadialGrid make_grid(const BackgroundGeometry& geom, int intervals) {
  if (intervals < 8) throw InvalidInput("grid needs at least 8 intervals");
  RadialGrid g;
  const double lo = geom.inner_radius();
  const double hi = geom.outer_radius();
  g.h = (hi - lo) / intervals;
  g.nodes.resize(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) g.nodes[static_cast<std::size_t>(i)] = lo + i * g.h;
  g.nodes.back() = hi;
  g.has_center = geom.center_regularity();
  if (g.has_center) {
    g.boundary_index = {intervals};
  } else {
    g.boundary_index = {0, intervals};
  }
  return g;
}

double beta_bar(int k, int n) { return std::pow(static_cast<double>(n - 1), k) * binomial(n, k); }

double mean_curvature_factor(const BackgroundGeometry& geom, double r) {
  if (r == 0.0) {
    if (!geom.center_regularity()) throw SingularityError("mean curvature factor at r = 0");
    return std::numeric_limits<double>::infinity();
  }
  if (r < 0.0) throw InvalidInput("negative radius");
  if (geom.curvature == Curvature::Flat) return 1.0 / r;
  return 1.0 / std::tanh(r);
}

RadialEigen barnabla_eigen(const BackgroundGeometry& geom, double r, const Jet& jet) {
  const int n = geom.n;
  const double base = -geom.kappa() * (n - 1);
  if (r == 0.0) {
    if (!geom.center_regularity()) throw SingularityError("tensor evaluation at r = 0 off a ball center");
    // u'/r -> u''(0); both eigenvalues reduce to 2(n-1) u''(0).
    const double lim = 2.0 * (n - 1) * jet.ddu;
    return {base + lim, base + lim, n};
  }
  const double hr = mean_curvature_factor(geom, r) * jet.du;
  return {base + (n - 1) * (jet.ddu + hr),
          base + jet.ddu + (2.0 * n - 3.0) * hr + (n - 2.0) * jet.du * jet.du, n};
}

PointResidual residual(const BackgroundGeometry& geom, int k, double r, const Jet& jet) {
  PointResidual out;
  out.eigen = barnabla_eigen(geom, r, jet);
  out.cone_ok = in_gamma_k_plus(out.eigen, k);
  if (out.cone_ok) {
    out.value = std::log(sigma_k(out.eigen, k)) - std::log(beta_bar(k, geom.n)) - 2.0 * k * jet.u;
  } else {
    out.value = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

JetSensitivity residual_sensitivity(const BackgroundGeometry& geom, int k, double r, const Jet& jet) {
  const int n = geom.n;
  const RadialEigen lam = barnabla_eigen(geom, r, jet);
  if (!in_gamma_k_plus(lam, k)) throw ConeViolation("residual linearization outside Gamma_k^+");
  const RadialNewton t = radial_newton(lam, k);
  const double w_rad = t.t_rad / t.sigma;
  const double w_tan = (n - 1) * t.t_tan / t.sigma;  // all tangential slots together
  JetSensitivity s;
  s.d_u = -2.0 * k;
  if (r == 0.0) {
    s.d_ddu = 2.0 * (n - 1) * (w_rad + w_tan);
    s.d_du = 0.0;
    return s;
  }
  const double hf = mean_curvature_factor(geom, r);
  s.d_ddu = (n - 1) * w_rad + w_tan;
  s.d_du = w_rad * (n - 1) * hf + w_tan * ((2.0 * n - 3.0) * hf + 2.0 * (n - 2.0) * jet.du);
  return s;
}

}  // namespace sigmaflow
