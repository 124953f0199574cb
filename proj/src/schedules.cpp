#include "sigmaflow/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

// ---------------------------------------------------------------------------
// LowSpeedFunction

namespace {

double iterated_exp_one(int depth) {
  double e = 1.0;
  for (int i = 0; i < depth; ++i) e = std::exp(e);
  return e;
}

}  // namespace

LowSpeedFunction LowSpeedFunction::linear(double c, double c0, double tau) {
  LowSpeedFunction f;
  f.kind = Kind::Linear;
  f.c = c;
  f.c0 = c0;
  f.tau = tau;
  return f;
}

LowSpeedFunction LowSpeedFunction::log_shift() {
  LowSpeedFunction f;
  f.kind = Kind::LogShift;
  f.tau = 1.0 / std::numbers::e;
  return f;
}

LowSpeedFunction LowSpeedFunction::power(double alpha) {
  LowSpeedFunction f;
  f.kind = Kind::Power;
  f.alpha = alpha;
  f.tau = alpha;
  return f;
}

LowSpeedFunction LowSpeedFunction::iterated_log(int depth) {
  LowSpeedFunction f;
  f.kind = Kind::IteratedLog;
  f.depth = depth;
  f.tau = 1.0 / iterated_exp_one(depth);
  return f;
}

LowSpeedFunction LowSpeedFunction::exponential(double tau) {
  LowSpeedFunction f;
  f.kind = Kind::Exponential;
  f.tau = tau;
  return f;
}

double LowSpeedFunction::value(double t) const {
  switch (kind) {
    case Kind::Linear: return c * t + c0;
    case Kind::LogShift: return std::log(std::numbers::e + t);
    case Kind::Power: return std::pow(1.0 + t, alpha);
    case Kind::IteratedLog: {
      double x = t + iterated_exp_one(depth);
      for (int i = 0; i < depth; ++i) x = std::log(x);
      return x;
    }
    case Kind::Exponential: return std::exp(t);
  }
  return 0.0;
}

double LowSpeedFunction::d1(double t) const {
  switch (kind) {
    case Kind::Linear: return c;
    case Kind::LogShift: return 1.0 / (std::numbers::e + t);
    case Kind::Power: return alpha * std::pow(1.0 + t, alpha - 1.0);
    case Kind::IteratedLog: {
      double x = t + iterated_exp_one(depth);
      double d = 1.0;
      for (int i = 0; i < depth; ++i) {
        d /= x;
        x = std::log(x);
      }
      return d;
    }
    case Kind::Exponential: return std::exp(t);
  }
  return 0.0;
}

double LowSpeedFunction::d2(double t) const {
  switch (kind) {
    case Kind::Linear: return 0.0;
    case Kind::LogShift: {
      const double s = std::numbers::e + t;
      return -1.0 / (s * s);
    }
    case Kind::Power: return alpha * (alpha - 1.0) * std::pow(1.0 + t, alpha - 2.0);
    case Kind::IteratedLog: {
      // x_0 = t + E, x_{i+1} = log x_i; xi' = prod 1/x_i and
      // xi'' = xi' * sum_i (-x_i' / x_i) with x_i' = prod_{l<i} 1/x_l.
      double x = t + iterated_exp_one(depth);
      double prefix = 1.0;
      double sum = 0.0;
      for (int i = 0; i < depth; ++i) {
        sum -= prefix / x;
        prefix /= x;
        x = std::log(x);
      }
      return prefix * sum;
    }
    case Kind::Exponential: return std::exp(t);
  }
  return 0.0;
}

bool LowSpeedFunction::speed_bound_holds(double horizon) const {
  constexpr int samples = 20001;
  for (int j = 0; j < samples; ++j) {
    const double s = static_cast<double>(j) / (samples - 1);
    const double t = t_threshold + horizon * s * s;
    const double d = d1(t);
    if (!std::isfinite(d) || d > tau * (1.0 + 1e-12)) return false;
  }
  return true;
}

void LowSpeedFunction::validate(double horizon) const {
  if (!(tau > 0.0)) throw InvalidInput("low-speed function needs tau > 0");
  if (t_threshold < 0.0) throw InvalidInput("low-speed threshold must be >= 0");
  if (kind == Kind::Linear && !(c > 0.0)) throw InvalidInput("linear low-speed function needs c > 0");
  if (kind == Kind::Power && !(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("power needs 0 < alpha < 1");
  if (kind == Kind::IteratedLog && (depth < 1 || depth > 3)) throw InvalidInput("iterated_log depth in 1..3");
  constexpr int samples = 4001;
  double prev = value(0.0);
  for (int j = 0; j < samples; ++j) {
    const double t = horizon * j / (samples - 1);
    const double x = value(t);
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidInput("low-speed function must stay positive and finite");
    if (x < prev) throw InvalidInput("low-speed function must be increasing");
    prev = x;
  }
  if (!(value(horizon) > value(0.0))) throw InvalidInput("low-speed function does not grow");
  if (!speed_bound_holds(horizon)) throw InvalidInput("low-speed function violates xi' <= tau after its threshold");
}

std::string to_string(LowSpeedFunction::Kind kind) {
  switch (kind) {
    case LowSpeedFunction::Kind::Linear: return "linear";
    case LowSpeedFunction::Kind::LogShift: return "log_shift";
    case LowSpeedFunction::Kind::Power: return "power";
    case LowSpeedFunction::Kind::IteratedLog: return "iterated_log";
    case LowSpeedFunction::Kind::Exponential: return "exponential";
  }
  return "?";
}

LowSpeedFunction::Kind low_speed_kind_from_string(const std::string& s) {
  if (s == "linear") return LowSpeedFunction::Kind::Linear;
  if (s == "log_shift") return LowSpeedFunction::Kind::LogShift;
  if (s == "power") return LowSpeedFunction::Kind::Power;
  if (s == "iterated_log") return LowSpeedFunction::Kind::IteratedLog;
  if (s == "exponential") return LowSpeedFunction::Kind::Exponential;
  throw InvalidInput("unknown low-speed kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Schedules

namespace {

TimeJet eval_poly(const std::vector<double>& a, double t) {
  TimeJet j;
  for (std::size_t i = a.size(); i-- > 0;) {
    j.d2 = j.d2 * t + 2.0 * j.d1;
    j.d1 = j.d1 * t + j.value;
    j.value = j.value * t + a[i];
  }
  return j;
}

TimeJet eval_tail(const ScheduleTail& tail, double t) {
  return std::visit(
      [t](const auto& tl) -> TimeJet {
        using T = std::decay_t<decltype(tl)>;
        if constexpr (std::is_same_v<T, LogTail>) {
          const double s = tl.xi.value(t) + tl.offset;
          const double g = tl.xi.d1(t) / s;
          return {std::log(s), g, tl.xi.d2(t) / s - g * g};
        } else if constexpr (std::is_same_v<T, ExponentialTail>) {
          const double e = tl.amplitude * std::exp(-(t - tl.t_ref));
          return {tl.target - e, e, -e};
        } else {
          return {tl.value, 0.0, 0.0};
        }
      },
      tail);
}

double min_poly_slope(const std::vector<double>& a, double T, int samples = 20001) {
  double m = std::numeric_limits<double>::infinity();
  for (int j = 0; j < samples; ++j) m = std::min(m, eval_poly(a, T * j / (samples - 1)).d1);
  return m;
}

}  // namespace

TimeJet ComponentSchedule::eval(double t) const {
  TimeJet j = (t_blend > 0.0 && t <= t_blend) ? eval_poly(quintic, t) : eval_tail(tail, t);
  if (decay_amplitude != 0.0) {
    const double e = decay_amplitude * std::exp(-t);
    j.value -= e;
    j.d1 += e;
    j.d2 -= e;
  }
  return j;
}

const ComponentSchedule& BoundarySchedule::at_radius(double r) const {
  for (const auto& c : components) {
    if (std::abs(c.radius - r) <= 1e-12 * std::max(1.0, std::abs(r))) return c;
  }
  throw InvalidInput("no schedule component at radius " + std::to_string(r));
}

double BoundarySchedule::min_slope(double t_max, int samples) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : components) {
    for (int j = 0; j < samples; ++j) m = std::min(m, c.eval(t_max * j / (samples - 1)).d1);
    if (c.t_blend > 0.0 && c.t_blend < t_max) {
      m = std::min(m, c.eval(c.t_blend).d1);
      m = std::min(m, min_poly_slope(c.quintic, c.t_blend) + c.decay_amplitude * std::exp(-c.t_blend));
    }
  }
  return m;
}

double BoundarySchedule::min_floor_gap(double t_max, int samples) const {
  if (!floor) return std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
  if (t_max < t1) return m;
  for (const auto& c : components) {
    for (int j = 0; j < samples; ++j) {
      const double t = t1 + (t_max - t1) * j / (samples - 1);
      m = std::min(m, c.eval(t).value - std::log(floor->value(t)));
    }
  }
  return m;
}

BoundarySchedule shifted_down(BoundarySchedule sched, double c) {
  if (c < 0.0) throw InvalidInput("shifted_down needs c >= 0");
  for (auto& comp : sched.components) comp.decay_amplitude += c;
  return sched;
}

std::vector<double> quintic_hermite(const TimeJet& a, const TimeJet& b, double T) {
  const double d = b.value - (a.value + a.d1 * T + 0.5 * a.d2 * T * T);
  const double dv = b.d1 - (a.d1 + a.d2 * T);
  const double da = b.d2 - a.d2;
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  return {a.value,
          a.d1,
          0.5 * a.d2,
          (20.0 * d - 8.0 * dv * T + da * T2) / (2.0 * T3),
          (-30.0 * d + 14.0 * dv * T - 2.0 * da * T2) / (2.0 * T4),
          (12.0 * d - 6.0 * dv * T + da * T2) / (2.0 * T5)};
}

// ---------------------------------------------------------------------------
// Compatibility

double apply_L0_at(const BackgroundGeometry& geom, int k, double r, const Jet& u0, const Jet& phi) {
  const JetSensitivity s = residual_sensitivity(geom, k, r, u0);
  return s.d_ddu * phi.ddu + s.d_du * phi.du + s.d_u * phi.u;
}

std::vector<double> apply_L0(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                             std::span<const double> u0, std::span<const double> phi) {
  const Tridiagonal J = residual_jacobian(geom, k, grid, u0);
  auto y = J.apply(phi);
  for (int b : grid.boundary_index) y[static_cast<std::size_t>(b)] = std::numeric_limits<double>::quiet_NaN();
  return y;
}

namespace {

bool finite_jet(const Jet& j) { return std::isfinite(j.u) && std::isfinite(j.du) && std::isfinite(j.ddu); }

double domain_length(const BackgroundGeometry& geom) { return geom.outer_radius() - geom.inner_radius(); }

// +1 when the interior lies at smaller radii (outer boundary), -1 otherwise.
double inward_sign(const BackgroundGeometry& geom, double r) {
  return std::abs(r - geom.outer_radius()) <= std::abs(r - geom.inner_radius()) || geom.center_regularity()
             ? 1.0
             : -1.0;
}

double point_v(const BackgroundGeometry& geom, int k, double r, const Jet& j, std::ptrdiff_t node) {
  const PointResidual res = residual(geom, k, r, j);
  if (!res.cone_ok) {
    throw ConeViolation("initial datum outside Gamma_k^+ at r = " + std::to_string(r), node);
  }
  return res.value / (2.0 * k);
}

int node_of_radius(const RadialGrid& grid, double r) {
  int best = 0;
  for (int i = 0; i < grid.size(); ++i) {
    if (std::abs(grid.nodes[static_cast<std::size_t>(i)] - r) <
        std::abs(grid.nodes[static_cast<std::size_t>(best)] - r)) {
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<double> compat_value_v(const RadialProfile& u0, const RadialGrid& grid,
                                   const BackgroundGeometry& geom, int k) {
  std::vector<double> v(grid.nodes.size());
  const double lim = 1e-4 * domain_length(geom);
  for (int i = 0; i < grid.size(); ++i) {
    double r = grid.nodes[static_cast<std::size_t>(i)];
    Jet j = u0.jet(r);
    if (!finite_jet(j)) {
      r -= inward_sign(geom, r) * lim;
      j = u0.jet(r);
    }
    v[static_cast<std::size_t>(i)] = point_v(geom, k, r, j, i);
  }
  return v;
}

CompatibleJet compatible_jet(const RadialProfile& u0, const RadialGrid& grid,
                             const BackgroundGeometry& geom, int k, double rb) {
  const int node = node_of_radius(grid, rb);
  const double L = domain_length(geom);
  const double dir = inward_sign(geom, rb);

  double re = rb;
  double step = 1e-3 * L;
  if (!finite_jet(u0.jet(rb))) {
    const double lim = 1e-4 * L;
    re = rb - dir * lim;
    step = 0.25 * lim;
  }
  // Inward one-sided second-order stencils for v' and v''.
  double f[4];
  for (int j = 0; j < 4; ++j) {
    const double r = re - dir * j * step;
    f[j] = point_v(geom, k, r, u0.jet(r), node);
  }
  const double dx = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * step);
  const double dxx = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (step * step);
  const Jet vjet{f[0], -dir * dx, dxx};

  CompatibleJet out;
  out.radius = rb;
  out.v = f[0];
  out.L0v = apply_L0_at(geom, k, re, u0.jet(re), vjet);
  const double phi0 = sample(u0, grid)[static_cast<std::size_t>(node)];
  out.jet = {phi0, out.v, out.L0v / (2.0 * k)};
  return out;
}

bool CompatibilityReport::ok() const noexcept {
  for (const auto& l : lines) {
    if (!l.value_ok || !l.slope_ok || !l.curvature_ok || l.clause14 == CompatibilityLine::Clause::Fail) {
      return false;
    }
  }
  return true;
}

std::string to_string(CompatibilityLine::Clause c) {
  switch (c) {
    case CompatibilityLine::Clause::Pass: return "pass";
    case CompatibilityLine::Clause::Fail: return "fail";
    case CompatibilityLine::Clause::NotApplicable: return "not applicable";
  }
  return "?";
}

CompatibilityReport check_compatibility(const RadialProfile& u0, const BoundarySchedule& sched,
                                        const RadialGrid& grid, const BackgroundGeometry& geom,
                                        int k, const CompatibilityOptions& opts) {
  CompatibilityReport rep;
  for (double rb : geom.boundary_radii()) {
    const CompatibleJet cj = compatible_jet(u0, grid, geom, k, rb);
    const TimeJet phi = sched.at_radius(rb).eval(0.0);
    CompatibilityLine l;
    l.radius = rb;
    l.v = cj.v;
    l.L0v = cj.L0v;
    l.value_gap = phi.value - cj.jet.value;
    l.slope_gap = 2.0 * k * phi.d1 - 2.0 * k * cj.v;
    l.curvature_gap = 2.0 * k * phi.d2 - cj.L0v;
    l.value_ok = std::abs(l.value_gap) <= opts.tol * std::max(1.0, std::abs(cj.jet.value));
    l.slope_ok = std::abs(l.slope_gap) <= opts.tol * std::max(1.0, std::abs(2.0 * k * cj.v));
    l.curvature_ok = std::abs(l.curvature_gap) <= opts.tol * std::max(1.0, std::abs(cj.L0v));
    if (std::abs(cj.v) <= opts.v_eps) {
      l.clause14 = cj.L0v >= -opts.tol ? CompatibilityLine::Clause::Pass : CompatibilityLine::Clause::Fail;
    }
    rep.lines.push_back(l);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

constexpr int kBlendSamples = 20001;

ComponentSchedule blend_ln(const TimeJet& start, double rb, const LowSpeedFunction& xi, double tb) {
  ComponentSchedule c;
  c.radius = rb;
  c.t_blend = tb;
  // Smallest offset whose tail starts no lower than phi(0), then grow
  // geometrically until the quintic bridge is monotone.
  double offset = std::max(0.0, std::exp(start.value) - xi.value(tb));
  const double step = std::max(offset, 1.0) * 0.02;
  for (int it = 0; it < 4000; ++it) {
    LogTail tail{xi, offset};
    const TimeJet end = eval_tail(tail, tb);
    auto q = quintic_hermite(start, end, tb);
    if (min_poly_slope(q, tb, kBlendSamples) >= 0.0) {
      c.quintic = std::move(q);
      c.tail = tail;
      return c;
    }
    offset = offset * 1.02 + step;
  }
  throw ConstructionError("no monotone blend into the log tail found");
}

ComponentSchedule blend_dirichlet(const TimeJet& start, double rb, double phi0, double tb, double jet_eps) {
  ComponentSchedule c;
  c.radius = rb;
  const double gap = phi0 - start.value;
  const double tol = 1e-10 * std::max(1.0, std::abs(phi0));
  if (gap < -tol) throw ConstructionError("Dirichlet target lies below the initial boundary value");
  if (std::abs(gap) <= tol && std::abs(start.d1) <= jet_eps && std::abs(start.d2) <= jet_eps) {
    c.tail = ConstantTail{phi0};
    return c;
  }
  // The 2-jet (phi0 - A, A, -A) is matched by the exponential itself.
  if (std::abs(start.d1 - gap) <= tol && std::abs(start.d2 + gap) <= tol) {
    c.tail = ExponentialTail{phi0, gap, 0.0};
    return c;
  }
  c.t_blend = tb;
  double best_slope = -std::numeric_limits<double>::infinity();
  constexpr int trials = 400;
  for (int j = 1; j <= trials; ++j) {
    const double amp = std::max(gap, tol) * j / trials;
    ExponentialTail tail{phi0, amp, tb};
    auto q = quintic_hermite(start, eval_tail(tail, tb), tb);
    const double s = min_poly_slope(q, tb, 2001);
    if (s >= 0.0 && s > best_slope) {
      best_slope = s;
      c.quintic = std::move(q);
      c.tail = tail;
    }
  }
  if (c.quintic.empty() || min_poly_slope(c.quintic, tb, kBlendSamples) < 0.0) {
    throw ConstructionError("no monotone blend toward the Dirichlet target found");
  }
  return c;
}

}  // namespace

BoundarySchedule build_schedule(const ScheduleTarget& target, const RadialProfile& u0,
                                const RadialGrid& grid, const BackgroundGeometry& geom, int k,
                                const ScheduleOptions& opts) {
  if (!(opts.t_blend > 0.0)) throw InvalidInput("t_blend must be positive");
  BoundarySchedule sched;
  for (double rb : geom.boundary_radii()) {
    const CompatibleJet cj = compatible_jet(u0, grid, geom, k, rb);
    if (cj.v < -opts.v_eps) {
      throw ConstructionError("compatible slope phi_t(0) = " + std::to_string(cj.v) +
                              " < 0: initial datum is not a subsolution at r = " + std::to_string(rb));
    }
    if (std::abs(cj.v) <= opts.v_eps && cj.L0v < -opts.v_eps) {
      throw ConstructionError("L0(v) < 0 where v = 0 at r = " + std::to_string(rb) +
                              ": no monotone compatible schedule");
    }
    if (const auto* ln = std::get_if<LnTarget>(&target)) {
      sched.components.push_back(blend_ln(cj.jet, rb, ln->xi, opts.t_blend));
    } else {
      sched.components.push_back(blend_dirichlet(cj.jet, rb, std::get<DirichletTarget>(target).phi0, opts.t_blend,
                                                       opts.v_eps));
    }
  }
  if (const auto* ln = std::get_if<LnTarget>(&target)) {
    sched.floor = ln->xi;
    sched.t1 = opts.t1.value_or(opts.t_blend);
  }
  return sched;
}

}  // namespace sigmaflow
