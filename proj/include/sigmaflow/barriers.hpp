#pragma once

// Explicit subsolutions: the global radial subsolution eta(A (rt^-p - r0^-p))
// anchored at the outer boundary, and the moving lower barrier
// -log(rho + eps(t)) + A((rho + delta)^-p - delta^-p) near a blow-up boundary.

#include <optional>
#include <span>
#include <vector>

#include "sigmaflow/geometry.hpp"
#include "sigmaflow/profile.hpp"
#include "sigmaflow/schedules.hpp"

namespace sigmaflow {

struct BarrierSpec {
  double A = 1.0;
  double p = 2.0;
  double delta = 0.1;
  double r0 = 0.1;
  /// Transition window of the cap; nullopt means eta is the identity.
  struct Window {
    double s_lo = -1.0;
    double s_hi = 0.0;
  };
  std::optional<Window> smoothing;

  /// Throws InvalidInput unless A, p - 1, delta, r0 > 0 and s_lo < s_hi.
  void validate() const;
  /// The window [A((2 delta + r0)^-p - r0^-p), A((delta + r0)^-p - r0^-p)].
  Window default_window() const;
  BarrierSpec with_default_window() const;
};

/// Value and first two derivatives of a scalar function.
struct Scalar2 {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Convex nondecreasing C^2 cap: constant below s_lo, identity above s_hi.
Scalar2 eta_cap(double s, const BarrierSpec& spec);

/// eta(A (rt^-p - r0^-p)) with rt = b + r0 - r, so the outer boundary r = b
/// sits at rt = r0 and the profile vanishes there.
RadialProfile global_subsolution(const BackgroundGeometry& geom, const BarrierSpec& spec);

/// The lower barrier at one time; rho is the distance to the outer boundary.
struct BarrierSlice {
  RadialProfile u;
  std::function<double(double r)> u_t;
  double epsilon = 0.0;
};

BarrierSlice boundary_lower_barrier(const BackgroundGeometry& geom, const BarrierSpec& spec,
                                    const LowSpeedFunction& xi, double t);

/// Jets (and, for parabolic checks, u_t) at sample radii.
struct SampledFunction {
  std::vector<double> r;
  std::vector<Jet> jet;
  std::vector<double> u_t;  // empty in elliptic mode
};

SampledFunction sample_jets(const RadialProfile& u, std::span<const double> radii);
SampledFunction sample_jets(const BarrierSlice& slice, std::span<const double> radii);

enum class VerifyMode { Elliptic, Parabolic };

struct VerificationReport {
  /// Elliptic: min sigma_k - beta_bar e^{2ku}. Parabolic: min of
  /// log sigma_k - log beta_bar - 2ku - 2k u_t.
  double min_margin = 0.0;
  int worst_node = -1;
  bool cone_ok = true;
  std::vector<int> cone_violations;
  bool is_strict = false;
  int samples = 0;
};

VerificationReport verify_subsolution(const SampledFunction& f, const BackgroundGeometry& geom, int k,
                                      VerifyMode mode, double strict_eps = 1e-10);

// Parameter searches.

struct SweepRow {
  double A = 0.0;
  double p = 0.0;
  double min_margin = 0.0;
  bool nonpositive = false;
  bool accepted = false;
};

struct SubsolutionSearch {
  std::optional<BarrierSpec> found;
  VerificationReport report;
  std::vector<SweepRow> rows;
};

struct SearchOptions {
  int max_exponent_A = 10;  // A = 2^0 .. 2^max
  int max_exponent_p = 6;   // p = 2^1 .. 2^max
  double strict_eps = 1e-10;
};

/// Smallest (A, p) on the dyadic lattice, ordered by i + j, for which the
/// global subsolution is strict at every node and nonpositive. With
/// `bridge` the cap window follows default_window(); otherwise eta is the
/// identity.
SubsolutionSearch search_global_subsolution(const BackgroundGeometry& geom, const RadialGrid& grid, int k,
                                            double delta, double r0, bool bridge,
                                            const SearchOptions& opts = {});

struct StripCheck {
  double min_margin = 0.0;
  double worst_rho = 0.0;
  double worst_t = 0.0;
  bool cone_ok = true;
  int samples = 0;
};

/// Parabolic margin of the lower barrier sampled on the strip
/// rho + eps(t) <= strip_width for t in [t_lo, t_hi].
StripCheck check_barrier_strip(const BackgroundGeometry& geom, const BarrierSpec& spec, const LowSpeedFunction& xi,
                               int k, double strip_width, double t_lo, double t_hi, int n_rho = 200, int n_t = 200);

struct BarrierSearch {
  std::optional<BarrierSpec> found;
  StripCheck check;
  std::vector<SweepRow> rows;
};

/// Dyadic sweep over (A, p) with A p >= 8 n tau for the lower barrier.
BarrierSearch search_boundary_barrier(const BackgroundGeometry& geom, const LowSpeedFunction& xi, int k,
                                      double delta, double t_lo, double t_hi, const SearchOptions& opts = {});

}  // namespace sigmaflow
