#pragma once

// Artifact formats read by the plotting tools. Headers and JSON keys are
// versioned by kSchemaVersion.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sigmaflow/flow.hpp"

namespace sigmaflow {

inline constexpr const char* kSeriesHeader = "t,ut_sup_interior,residual_sup,cone_margin,grad_sup,hess_sup";
inline constexpr const char* kSnapshotHeader = "r,u,u_t,residual,lambda_rad,lambda_tan";

/// %.17g, with nan / inf / -inf spelled out.
std::string format_csv_double(double x);

/// x rounded to `digits` significant decimal digits; non-finite values pass through.
double round_significant(double x, int digits = 12);
/// Copy of j with every floating-point number rounded to 12 significant digits.
nlohmann::json rounded(const nlohmann::json& j);

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows);
/// Boundary rows carry nan in residual, lambda_rad and lambda_tan.
void write_snapshot_csv(std::ostream& out, const RadialGrid& grid, const FlowState& state);

/// Writes text to a file, creating parent directories. Throws Error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Rounded JSON, two-space indent, trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// git-describe-style stamp captured at configure time.
const char* build_stamp();

}  // namespace sigmaflow
