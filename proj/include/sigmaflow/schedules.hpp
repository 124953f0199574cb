#pragma once

// Boundary schedules phi(t), low-speed increasing functions xi(t), and the
// compatibility conditions between the schedule and the initial datum.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sigmaflow/geometry.hpp"
#include "sigmaflow/profile.hpp"
#include "sigmaflow/radial_operator.hpp"

namespace sigmaflow {

/// Positive, divergent time function with xi'(t) <= tau for t >= t_threshold.
struct LowSpeedFunction {
  enum class Kind {
    Linear,        // c t + c0
    LogShift,      // log(e + t)
    Power,         // (1 + t)^alpha, 0 < alpha < 1
    IteratedLog,   // log applied `depth` times to (t + E_depth), E chosen so xi(0) = 1
    Exponential,   // e^t; never low-speed, kept so validation can reject it
  };

  Kind kind = Kind::Linear;
  double c = 1.0;
  double c0 = 1.0;
  double alpha = 0.5;
  int depth = 2;
  double tau = 1.0;
  double t_threshold = 0.0;

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;

  /// True when xi' <= tau on a dense sample of [t_threshold, t_threshold + horizon].
  bool speed_bound_holds(double horizon = 1.0e4) const;
  /// Full definition: positivity on [0, horizon], growth, speed bound.
  /// Throws InvalidInput with the failed clause.
  void validate(double horizon = 1.0e4) const;

  static LowSpeedFunction linear(double c, double c0, double tau);
  static LowSpeedFunction log_shift();
  static LowSpeedFunction power(double alpha);
  static LowSpeedFunction iterated_log(int depth);
  static LowSpeedFunction exponential(double tau);
};

std::string to_string(LowSpeedFunction::Kind kind);
LowSpeedFunction::Kind low_speed_kind_from_string(const std::string& s);

/// phi, phi_t, phi_tt at one time.
struct TimeJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// log(xi(t) + offset): the blow-up tail.
struct LogTail {
  LowSpeedFunction xi;
  double offset = 0.0;
};

/// target - amplitude e^{-(t - t_ref)}: the Dirichlet tail.
struct ExponentialTail {
  double target = 0.0;
  double amplitude = 0.0;
  double t_ref = 0.0;
};

struct ConstantTail {
  double value = 0.0;
};

using ScheduleTail = std::variant<LogTail, ExponentialTail, ConstantTail>;

/// Schedule on one boundary component: a quintic on [0, t_blend] joined C^2 to
/// a closed-form tail, minus decay_amplitude e^{-t} on the whole line.
struct ComponentSchedule {
  double radius = 0.0;
  double t_blend = 0.0;
  std::vector<double> quintic;  // coefficients in powers of t, size 6 when t_blend > 0
  ScheduleTail tail = ConstantTail{};
  double decay_amplitude = 0.0;

  TimeJet eval(double t) const;
};

struct BoundarySchedule {
  std::vector<ComponentSchedule> components;
  /// Blow-up floor phi >= log xi(t) for t >= t1 (LN mode only).
  std::optional<LowSpeedFunction> floor;
  double t1 = 0.0;

  const ComponentSchedule& at_radius(double r) const;
  /// Smallest phi_t over a dense sample of [0, t_max] and all components.
  double min_slope(double t_max, int samples = 20001) const;
  /// Smallest phi - log xi over a dense sample of [t1, t_max]; +inf without a floor.
  double min_floor_gap(double t_max, int samples = 20001) const;
};

/// The schedule compatible with u0 - c, given one compatible with u0, c >= 0:
/// phi - c e^{-t}. Stays monotone and lies below the original.
BoundarySchedule shifted_down(BoundarySchedule sched, double c);

/// Coefficients of the quintic with the given 2-jets at 0 and at T.
std::vector<double> quintic_hermite(const TimeJet& at0, const TimeJet& atT, double T);

// Compatibility quantities.

/// v = residual(u0) / 2k at every node, evaluated from the profile's jets.
/// At a singular (blow-up) node the inward one-sided limit is used.
/// Throws ConeViolation carrying the node index.
std::vector<double> compat_value_v(const RadialProfile& u0, const RadialGrid& grid,
                                   const BackgroundGeometry& geom, int k);

/// Pointwise L0(phi) at radius r for the frozen-coefficient linearization
/// at u0.
double apply_L0_at(const BackgroundGeometry& geom, int k, double r, const Jet& u0, const Jet& phi);

/// Discrete L0(phi) on grid functions: the Jacobian of the discrete residual
/// at u0 applied to phi. NaN at boundary nodes.
std::vector<double> apply_L0(const BackgroundGeometry& geom, int k, const RadialGrid& grid,
                             std::span<const double> u0, std::span<const double> phi);

/// The 2-jet (phi(0), phi_t(0), phi_tt(0)) at a boundary radius forced by
/// compatibility with u0, together with v and L0(v) there.
struct CompatibleJet {
  double radius = 0.0;
  TimeJet jet;
  double v = 0.0;
  double L0v = 0.0;
};

CompatibleJet compatible_jet(const RadialProfile& u0, const RadialGrid& grid,
                             const BackgroundGeometry& geom, int k, double boundary_radius);

struct CompatibilityOptions {
  double tol = 1e-8;
  double v_eps = 1e-8;
};

struct CompatibilityLine {
  double radius = 0.0;
  double value_gap = 0.0;      // phi(0) - u0
  double slope_gap = 0.0;      // 2k phi_t(0) - residual(u0)
  double curvature_gap = 0.0;  // 2k phi_tt(0) - L0(v)
  double v = 0.0;
  double L0v = 0.0;
  enum class Clause { Pass, Fail, NotApplicable } clause14 = Clause::NotApplicable;
  bool value_ok = false;
  bool slope_ok = false;
  bool curvature_ok = false;
};

struct CompatibilityReport {
  std::vector<CompatibilityLine> lines;
  bool ok() const noexcept;
};

std::string to_string(CompatibilityLine::Clause c);

CompatibilityReport check_compatibility(const RadialProfile& u0, const BoundarySchedule& sched,
                                        const RadialGrid& grid, const BackgroundGeometry& geom,
                                        int k, const CompatibilityOptions& opts = {});

// Construction.

struct LnTarget {
  LowSpeedFunction xi;
};

struct DirichletTarget {
  double phi0 = 0.0;
};

using ScheduleTarget = std::variant<LnTarget, DirichletTarget>;

struct ScheduleOptions {
  double t_blend = 1.0;
  /// Time after which phi >= log xi is asserted (LN mode). Defaults to t_blend.
  std::optional<double> t1;
  double v_eps = 1e-8;
};

/// Monotone C^2 schedule compatible with u0 at every boundary component.
/// Throws ConstructionError when the compatible 2-jet has phi_t(0) < 0 or no
/// monotone blend exists.
BoundarySchedule build_schedule(const ScheduleTarget& target, const RadialProfile& u0,
                                const RadialGrid& grid, const BackgroundGeometry& geom, int k,
                                const ScheduleOptions& opts = {});

}  // namespace sigmaflow
