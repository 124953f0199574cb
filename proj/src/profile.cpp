#include "sigmaflow/profile.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

std::vector<double> sample(const RadialProfile& profile, const RadialGrid& grid) {
  std::vector<double> u(grid.nodes.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = grid.nodes[i];
    double v = profile.jet(r).u;
    if (!std::isfinite(v)) {
      if (!profile.singular_trace) throw InvalidInput("profile is not finite at r = " + std::to_string(r));
      v = profile.singular_trace(r, grid.h);
    }
    u[i] = v;
  }
  return u;
}

RadialProfile constant_profile(double c) {
  return {[c](double) { return Jet{c, 0.0, 0.0}; }, {}};
}

RadialProfile shifted(RadialProfile base, double c) {
  RadialProfile out;
  out.jet = [f = base.jet, c](double r) {
    Jet j = f(r);
    j.u += c;
    return j;
  };
  if (base.singular_trace) {
    out.singular_trace = [g = base.singular_trace, c](double r, double h) { return g(r, h) + c; };
  }
  return out;
}

double PoincareBall::value(double r) const {
  const double d = R * R - r * r;
  if (d <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(2.0 * R / d);
}

Jet PoincareBall::jet(double r) const {
  const double d = R * R - r * r;
  if (d <= 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, inf};
  }
  // (R-r)(R+r) keeps precision near the boundary.
  const double dd = (R - r) * (R + r);
  return {std::log(2.0 * R) - std::log(R - r) - std::log(R + r), 2.0 * r / dd,
          2.0 / dd + 4.0 * r * r / (dd * dd)};
}

double PoincareBall::half_cell_trace(double h) const {
  const double w = 0.5 * h;
  const auto F = [](double s) { return s * std::log(s) - s; };
  // average of -log(R - r) and -log(R + r) over [R - w, R]
  const double near = 1.0 - std::log(w);
  const double far = -(F(2.0 * R) - F(2.0 * R - w)) / w;
  return std::log(2.0 * R) + near + far;
}

RadialProfile PoincareBall::profile() const {
  RadialProfile p;
  p.jet = [self = *this](double r) { return self.jet(r); };
  p.singular_trace = [self = *this](double, double h) { return self.half_cell_trace(h); };
  return p;
}

}  // namespace sigmaflow
