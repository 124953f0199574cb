#pragma once

// JSON run configuration. Every object is closed: unknown keys are errors.
// Missing keys take the defaults below, and to_json echoes the effective
// configuration with every default filled in.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sigmaflow/barriers.hpp"
#include "sigmaflow/elliptic.hpp"
#include "sigmaflow/flow.hpp"
#include "sigmaflow/geometry.hpp"
#include "sigmaflow/profile.hpp"
#include "sigmaflow/schedules.hpp"

namespace sigmaflow {

inline constexpr int kSchemaVersion = 1;

enum class Mode { FlowLn, FlowDirichlet, Elliptic, VerifyBarrier, CheckCompat, Sweep };

std::string to_string(Mode m);
/// Throws ConfigError on an unknown name.
Mode mode_from_string(const std::string& s);

struct InitialSpec {
  enum class Kind { PoincareShift, Constant };
  Kind kind = Kind::PoincareShift;
  double R = 1.0;      // poincare_shift: u*(r) = log(2R / (R^2 - r^2)) + shift
  double shift = 0.0;
  double value = 0.0;  // constant

  RadialProfile profile() const;
};

struct ScheduleSpec {
  enum class Kind { Ln, Dirichlet };
  Kind kind = Kind::Ln;
  LowSpeedFunction xi;
  double phi0 = 0.0;
  ScheduleOptions options;

  ScheduleTarget target() const;
};

/// Distance-to-boundary windows for the asymptotic fit and the error report.
struct DiagnosticsSpec {
  double fit_lo = 0.05;
  double fit_hi = 0.2;
  double error_lo = 0.1;
  double error_hi = 0.5;
};

struct EllipticSpec {
  /// Dirichlet value for a single solve; defaults to the initial datum's trace.
  std::optional<double> boundary_value;
  /// Use the trace of the unshifted Poincare profile instead ("exact" in JSON).
  bool exact_boundary = false;
  /// Continuation levels; when non-empty they replace the single solve.
  std::vector<double> levels;
};

struct BarrierJob {
  enum class Kind { Global, Boundary };
  Kind kind = Kind::Global;
  double delta = 0.1;
  double r0 = 0.1;       // global only
  bool bridge = true;    // global only
  double t_lo = 24.0;    // boundary only
  double t_hi = 1.0e4;
  SearchOptions search;
};

struct CompatSpec {
  CompatibilityOptions options;
  /// Build the schedule from this datum instead of `initial`.
  std::optional<InitialSpec> schedule_from;
};

struct SweepSpec {
  std::vector<int> N;
  std::vector<int> k;
  std::vector<Scheme> scheme;
  std::vector<LowSpeedFunction> low_speed;
  Mode base_mode = Mode::FlowLn;
};

struct Config {
  std::optional<Mode> mode;
  BackgroundGeometry geometry{3, Curvature::Flat, Ball{1.0}};
  int k = 1;
  int N = 200;
  InitialSpec initial;
  std::optional<ScheduleSpec> schedule;
  RunConfig flow;  // k and N mirror the top-level fields
  DiagnosticsSpec diagnostics;
  NewtonConfig newton;
  EllipticSpec elliptic;
  std::optional<BarrierJob> barrier;
  CompatSpec compat;
  std::optional<SweepSpec> sweep;
};

/// Throws ConfigError with the offending key path.
Config parse_config(const nlohmann::json& j);
/// Reads and parses a file; unreadable files and JSON syntax errors are ConfigErrors.
Config load_config(const std::string& path);

nlohmann::json to_json(const Config& c);
nlohmann::json to_json(const LowSpeedFunction& xi);
nlohmann::json to_json(const InitialSpec& s);

/// Checks the sections a mode needs; throws ConfigError.
void require_mode_inputs(const Config& c, Mode mode);

std::uint64_t fnv1a(std::string_view bytes);
/// 16 hex digits of fnv1a over the compact dump of to_json(c).
std::string config_digest(const Config& c);

}  // namespace sigmaflow
