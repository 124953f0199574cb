#include "sigmaflow/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

void BarrierSpec::validate() const {
  if (!(A > 0.0)) throw InvalidInput("barrier amplitude A must be positive");
  if (!(p > 1.0)) throw InvalidInput("barrier power p must exceed 1");
  if (!(delta > 0.0)) throw InvalidInput("barrier delta must be positive");
  if (!(r0 > 0.0)) throw InvalidInput("barrier r0 must be positive");
  if (smoothing && !(smoothing->s_lo < smoothing->s_hi)) throw InvalidInput("smoothing window needs s_lo < s_hi");
}

BarrierSpec::Window BarrierSpec::default_window() const {
  const double base = std::pow(r0, -p);
  return {A * (std::pow(2.0 * delta + r0, -p) - base), A * (std::pow(delta + r0, -p) - base)};
}

BarrierSpec BarrierSpec::with_default_window() const {
  BarrierSpec s = *this;
  s.smoothing = default_window();
  return s;
}

Scalar2 eta_cap(double s, const BarrierSpec& spec) {
  if (!spec.smoothing) return {s, 1.0, 0.0};
  const double lo = spec.smoothing->s_lo;
  const double hi = spec.smoothing->s_hi;
  const double L = hi - lo;
  if (s >= hi) return {s, 1.0, 0.0};
  if (s <= lo) return {hi - 0.5 * L, 0.0, 0.0};
  // eta' = 3x^2 - 2x^3 on x = (s - lo)/L, integrated from the top.
  const double x = (s - lo) / L;
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
  return {hi - L * ((1.0 - x3) - 0.5 * (1.0 - x4)), 3.0 * x2 - 2.0 * x3, 6.0 * (x - x2) / L};
}

RadialProfile global_subsolution(const BackgroundGeometry& geom, const BarrierSpec& spec) {
  spec.validate();
  const double b = geom.outer_radius();
  RadialProfile prof;
  prof.jet = [spec, b](double r) {
    const double rt = spec.r0 + (b - r);
    const double s = spec.A * (std::pow(rt, -spec.p) - std::pow(spec.r0, -spec.p));
    const double s1 = spec.A * spec.p * std::pow(rt, -spec.p - 1.0);
    const double s2 = spec.A * spec.p * (spec.p + 1.0) * std::pow(rt, -spec.p - 2.0);
    const Scalar2 e = eta_cap(s, spec);
    return Jet{e.value, e.d1 * s1, e.d2 * s1 * s1 + e.d1 * s2};
  };
  return prof;
}

BarrierSlice boundary_lower_barrier(const BackgroundGeometry& geom, const BarrierSpec& spec,
                                    const LowSpeedFunction& xi, double t) {
  spec.validate();
  const double R = geom.outer_radius();
  const double x = xi.value(t);
  const double eps = 1.0 / x;
  const double eps_t = -xi.d1(t) / (x * x);
  BarrierSlice out;
  out.epsilon = eps;
  out.u.jet = [spec, R, eps](double r) {
    const double rho = R - r;
    const double a = rho + eps;
    const double b = rho + spec.delta;
    const double w = spec.A * (std::pow(b, -spec.p) - std::pow(spec.delta, -spec.p));
    const double u_rho = -1.0 / a - spec.A * spec.p * std::pow(b, -spec.p - 1.0);
    const double u_rhorho = 1.0 / (a * a) + spec.A * spec.p * (spec.p + 1.0) * std::pow(b, -spec.p - 2.0);
    return Jet{-std::log(a) + w, -u_rho, u_rhorho};
  };
  out.u_t = [R, eps, eps_t](double r) { return -eps_t / (R - r + eps); };
  return out;
}

SampledFunction sample_jets(const RadialProfile& u, std::span<const double> radii) {
  SampledFunction f;
  f.r.assign(radii.begin(), radii.end());
  for (double r : radii) f.jet.push_back(u.jet(r));
  return f;
}

SampledFunction sample_jets(const BarrierSlice& slice, std::span<const double> radii) {
  SampledFunction f = sample_jets(slice.u, radii);
  for (double r : radii) f.u_t.push_back(slice.u_t(r));
  return f;
}

VerificationReport verify_subsolution(const SampledFunction& f, const BackgroundGeometry& geom, int k,
                                      VerifyMode mode, double strict_eps) {
  if (f.r.size() != f.jet.size()) throw InvalidInput("sample radii and jets differ in length");
  if (mode == VerifyMode::Parabolic && f.u_t.size() != f.r.size()) {
    throw InvalidInput("parabolic verification needs u_t at every sample");
  }
  VerificationReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.samples = static_cast<int>(f.r.size());
  const double lb = std::log(beta_bar(k, geom.n));
  for (std::size_t i = 0; i < f.r.size(); ++i) {
    const Jet& j = f.jet[i];
    const bool center = f.r[i] == 0.0 && geom.center_regularity();
    bool ok = std::isfinite(j.u) && std::isfinite(j.du) && std::isfinite(j.ddu) && !(center && j.du != 0.0);
    RadialEigen e;
    if (ok) {
      e = barnabla_eigen(geom, f.r[i], j);
      ok = in_gamma_k_plus(e, k);
    }
    if (!ok) {
      rep.cone_ok = false;
      rep.cone_violations.push_back(static_cast<int>(i));
      continue;
    }
    const double sk = sigma_k(e, k);
    const double m = mode == VerifyMode::Elliptic
                         ? sk - beta_bar(k, geom.n) * std::exp(2.0 * k * j.u)
                         : std::log(sk) - lb - 2.0 * k * j.u - 2.0 * k * f.u_t[i];
    if (m < rep.min_margin) {
      rep.min_margin = m;
      rep.worst_node = static_cast<int>(i);
    }
  }
  if (!rep.cone_ok && rep.worst_node < 0) rep.min_margin = -std::numeric_limits<double>::infinity();
  rep.is_strict = rep.cone_ok && rep.min_margin > strict_eps;
  return rep;
}

SubsolutionSearch search_global_subsolution(const BackgroundGeometry& geom, const RadialGrid& grid, int k,
                                            double delta, double r0, bool bridge, const SearchOptions& opts) {
  SubsolutionSearch out;
  const int max_i = opts.max_exponent_A;
  const int max_j = opts.max_exponent_p;
  for (int d = 1; d <= max_i + max_j; ++d) {
    for (int j = 1; j <= std::min(d, max_j); ++j) {
      const int i = d - j;
      if (i > max_i) continue;
      BarrierSpec spec;
      spec.A = std::ldexp(1.0, i);
      spec.p = std::ldexp(1.0, j);
      spec.delta = delta;
      spec.r0 = r0;
      if (bridge) spec = spec.with_default_window();
      // The window collapses in floating point once r0^-p swamps the difference.
      if (spec.smoothing && !(spec.smoothing->s_lo < spec.smoothing->s_hi)) continue;
      const auto f = sample_jets(global_subsolution(geom, spec), grid.nodes);
      const auto rep = verify_subsolution(f, geom, k, VerifyMode::Elliptic, opts.strict_eps);
      SweepRow row{spec.A, spec.p, rep.min_margin, true, false};
      for (const auto& jt : f.jet) row.nonpositive = row.nonpositive && jt.u <= 0.0;
      row.accepted = rep.is_strict && row.nonpositive;
      out.rows.push_back(row);
      if (row.accepted) {
        out.found = spec;
        out.report = rep;
        return out;
      }
    }
  }
  return out;
}

StripCheck check_barrier_strip(const BackgroundGeometry& geom, const BarrierSpec& spec, const LowSpeedFunction& xi,
                               int k, double strip_width, double t_lo, double t_hi, int n_rho, int n_t) {
  StripCheck out;
  out.min_margin = std::numeric_limits<double>::infinity();
  const double R = geom.outer_radius();
  for (int a = 0; a < n_t; ++a) {
    const double t = n_t == 1 ? t_lo : t_lo + (t_hi - t_lo) * a / (n_t - 1);
    const auto slice = boundary_lower_barrier(geom, spec, xi, t);
    const double span = strip_width - slice.epsilon;
    if (span < 0.0) continue;
    std::vector<double> radii;
    for (int b = 0; b < n_rho; ++b) radii.push_back(R - span * b / (n_rho - 1));
    const auto rep = verify_subsolution(sample_jets(slice, radii), geom, k, VerifyMode::Parabolic, 0.0);
    out.samples += rep.samples;
    out.cone_ok = out.cone_ok && rep.cone_ok;
    if (rep.worst_node >= 0 && rep.min_margin < out.min_margin) {
      out.min_margin = rep.min_margin;
      out.worst_rho = R - radii[static_cast<std::size_t>(rep.worst_node)];
      out.worst_t = t;
    }
  }
  if (out.samples == 0) throw InvalidInput("strip is empty on the requested time range");
  return out;
}

BarrierSearch search_boundary_barrier(const BackgroundGeometry& geom, const LowSpeedFunction& xi, int k,
                                      double delta, double t_lo, double t_hi, const SearchOptions& opts) {
  BarrierSearch out;
  const double floor_ap = 8.0 * geom.n * xi.tau;
  const double width = 1.0 / floor_ap;
  for (int d = 1; d <= opts.max_exponent_A + opts.max_exponent_p; ++d) {
    for (int j = 1; j <= std::min(d, opts.max_exponent_p); ++j) {
      const int i = d - j;
      if (i > opts.max_exponent_A) continue;
      BarrierSpec spec;
      spec.A = std::ldexp(1.0, i);
      spec.p = std::ldexp(1.0, j);
      spec.delta = delta;
      if (spec.A * spec.p < floor_ap) continue;
      const auto chk = check_barrier_strip(geom, spec, xi, k, width, t_lo, t_hi);
      SweepRow row{spec.A, spec.p, chk.min_margin, true, chk.cone_ok && chk.min_margin >= 0.0};
      out.rows.push_back(row);
      if (row.accepted) {
        out.found = spec;
        out.check = chk;
        return out;
      }
    }
  }
  return out;
}

}  // namespace sigmaflow
