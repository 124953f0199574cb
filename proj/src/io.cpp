#include "sigmaflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sigmaflow/error.hpp"

#ifndef SIGMAFLOW_BUILD_STAMP
#define SIGMAFLOW_BUILD_STAMP "unknown"
#endif

namespace sigmaflow {

std::string format_csv_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double round_significant(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  return std::strtod(buf, nullptr);
}

nlohmann::json rounded(const nlohmann::json& j) {
  if (j.is_number_float()) return round_significant(j.get<double>());
  if (j.is_array()) {
    auto out = nlohmann::json::array();
    for (const auto& x : j) out.push_back(rounded(x));
    return out;
  }
  if (j.is_object()) {
    auto out = nlohmann::json::object();
    for (const auto& item : j.items()) out[item.key()] = rounded(item.value());
    return out;
  }
  return j;
}

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows) {
  out << kSeriesHeader << "\r\n";
  for (const auto& r : rows) {
    out << format_csv_double(r.t) << ',' << format_csv_double(r.ut_sup_interior) << ','
        << format_csv_double(r.residual_sup) << ',' << format_csv_double(r.cone_margin) << ','
        << format_csv_double(r.grad_sup) << ',' << format_csv_double(r.hess_sup) << "\r\n";
  }
}

void write_snapshot_csv(std::ostream& out, const RadialGrid& grid, const FlowState& state) {
  out << kSnapshotHeader << "\r\n";
  for (int i = 0; i < grid.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const bool b = grid.is_boundary(i);
    const double nan = std::nan("");
    const double lr = b || state.eigen.empty() ? nan : state.eigen[ui].rad;
    const double lt = b || state.eigen.empty() ? nan : state.eigen[ui].tan;
    const double res = b || state.residual.empty() ? nan : state.residual[ui];
    out << format_csv_double(grid.nodes[ui]) << ',' << format_csv_double(state.u[ui]) << ','
        << format_csv_double(state.u_t.empty() ? nan : state.u_t[ui]) << ',' << format_csv_double(res) << ','
        << format_csv_double(lr) << ',' << format_csv_double(lt) << "\r\n";
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, rounded(j).dump(2) + "\n");
}

const char* build_stamp() { return SIGMAFLOW_BUILD_STAMP; }

}  // namespace sigmaflow
