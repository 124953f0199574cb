#include "sigmaflow/radial_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

Jet node_jet(const RadialGrid& grid, std::span<const double> u, int i) {
  const double h = grid.h;
  const auto at = [&](int j) { return u[static_cast<std::size_t>(j)]; };
  if (i == 0 && grid.has_center) {
    return {at(0), 0.0, 2.0 * (at(1) - at(0)) / (h * h)};
  }
  return {at(i), (at(i + 1) - at(i - 1)) / (2.0 * h), (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h)};
}

DiscreteResidual discrete_residual(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                                   std::span<const double> u) {
  const int m = grid.size();
  DiscreteResidual out;
  out.value.assign(static_cast<std::size_t>(m), std::numeric_limits<double>::quiet_NaN());
  out.eigen.assign(static_cast<std::size_t>(m), RadialEigen{0.0, 0.0, geom.n});
  const double log_beta = std::log(beta_bar(k, geom.n));
  for (int i = 0; i < m; ++i) {
    if (grid.is_boundary(i)) continue;
    const Jet j = node_jet(grid, u, i);
    const RadialEigen lam = barnabla_eigen(geom, grid.nodes[static_cast<std::size_t>(i)], j);
    out.eigen[static_cast<std::size_t>(i)] = lam;
    const double margin = relative_cone_margin(lam, k);
    out.cone_margin = std::min(out.cone_margin, margin);
    if (!(margin > 0.0)) {
      if (out.worst_node < 0) out.worst_node = i;
      continue;
    }
    out.value[static_cast<std::size_t>(i)] = std::log(sigma_k(lam, k)) - log_beta - 2.0 * k * j.u;
  }
  return out;
}

std::vector<double> Tridiagonal::apply(std::span<const double> x) const {
  const std::size_t n = size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += lower[i] * x[i - 1];
    if (i + 1 < n) s += upper[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

std::vector<double> solve(const Tridiagonal& m, std::span<const double> rhs) {
  const std::size_t n = m.size();
  std::vector<double> c(n, 0.0), d(n, 0.0), x(n, 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(m.diag[i]));
  const double tiny = 1e-14 * std::max(scale, 1.0);
  double pivot = m.diag[0];
  if (!(std::abs(pivot) > tiny)) throw SolverError(SolverError::Kind::SingularJacobian, "zero pivot in row 0");
  c[0] = n > 1 ? m.upper[0] / pivot : 0.0;
  d[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = m.diag[i] - m.lower[i] * c[i - 1];
    if (!(std::abs(pivot) > tiny) || !std::isfinite(pivot)) {
      throw SolverError(SolverError::Kind::SingularJacobian, "zero pivot in row " + std::to_string(i));
    }
    c[i] = i + 1 < n ? m.upper[i] / pivot : 0.0;
    d[i] = (rhs[i] - m.lower[i] * d[i - 1]) / pivot;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

Tridiagonal residual_jacobian(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                              std::span<const double> u) {
  const int m = grid.size();
  const double h = grid.h;
  Tridiagonal J(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (grid.is_boundary(i)) {
      J.diag[si] = 1.0;
      continue;
    }
    const Jet j = node_jet(grid, u, i);
    JetSensitivity s;
    try {
      s = residual_sensitivity(geom, k, grid.nodes[si], j);
    } catch (const ConeViolation&) {
      throw ConeViolation("Jacobian assembly outside Gamma_k^+", i);
    }
    if (i == 0 && grid.has_center) {
      // ddu = 2 (u1 - u0) / h^2
      J.diag[si] = s.d_u - 2.0 * s.d_ddu / (h * h);
      J.upper[si] = 2.0 * s.d_ddu / (h * h);
      continue;
    }
    J.lower[si] = s.d_ddu / (h * h) - s.d_du / (2.0 * h);
    J.diag[si] = s.d_u - 2.0 * s.d_ddu / (h * h);
    J.upper[si] = s.d_ddu / (h * h) + s.d_du / (2.0 * h);
  }
  return J;
}

}  // namespace sigmaflow
