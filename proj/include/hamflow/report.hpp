#pragma once

// Serialization of analysis results: JSON reports (schema version 1), the
// degenerate-cell CSV and gnuplot-ready columnar data. Files are written to
// a temporary sibling and renamed into place.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hamflow/config.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/sflow.hpp"
#include "hamflow/toruscan.hpp"

namespace hamflow {

inline constexpr int kSchemaVersion = 1;

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Header shared by every report; "timestamp" is the only field that varies
/// between identical runs.
inline json report_header(const std::string& command) {
  json j = json::object();
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["timestamp"] = utc_timestamp();
  return j;
}

/// Copy of a report without the fields excluded from determinism checks.
inline json comparable(json report) {
  report.erase("timestamp");
  return report;
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const TorusPoint& p) { return json(std::vector<double>(p.angles().begin(), p.angles().end())); }

inline json to_json(const Crossing& c) {
  json j = json::object();
  j["lambda0"] = c.lambda0;
  j["kernel_dim"] = c.kernel_dim;
  j["kernel"] = to_json(c.kernel);
  j["form"] = to_json(c.form.matrix());
  j["signature"] = c.signature.value();
  j["n_plus"] = c.signature.plus;
  j["n_zero"] = c.signature.zero;
  j["n_minus"] = c.signature.minus;
  j["regular"] = c.regular;
  return j;
}

inline json to_json(const SflResult& r) {
  json j = json::object();
  j["value"] = r.value;
  j["method"] = to_string(r.method);
  json cs = json::array();
  for (const auto& c : r.crossings) cs.push_back(to_json(c));
  j["crossings"] = std::move(cs);
  json d = json::object();
  d["grid"] = r.diagnostics.grid;
  d["refinements"] = r.diagnostics.refinements;
  d["tol"] = r.diagnostics.tol;
  d["width"] = r.diagnostics.width;
  j["diagnostics"] = std::move(d);
  return j;
}

inline json to_json(const ChernVector& cv) {
  json j = json::object();
  j["components"] = cv.components;
  j["base_shifts"] = cv.shifts;
  json loops = json::array();
  for (const auto& l : cv.loops) loops.push_back(to_json(l));
  j["loops"] = std::move(loops);
  return j;
}

inline json to_json(const Certificate& c) {
  json j = json::object();
  j["invertible_point"] = to_json(c.invertible_point);
  j["gap"] = c.gap;
  j["nonzero_component"] = c.nonzero_component;
  j["value"] = c.value;
  j["chern"] = c.chern.components;
  j["conclusion"] = c.conclusion;
  return j;
}

inline json to_json(const ScanReport& r) {
  json j = json::object();
  j["set"] = "linearized degeneracy set (kernel dimension > 0 at cell centers)";
  json levels = json::array();
  for (const auto& l : r.levels) {
    json lj = json::object();
    lj["resolution"] = l.resolution;
    lj["box_count"] = l.degenerate_count();
    json cells = json::array();
    for (const ScanCell* c : l.degenerate_cells()) {
      json cj = json::object();
      cj["index"] = c->index;
      cj["angles"] = c->angles;
      cj["kernel_dim"] = c->kernel_dim;
      cj["gap"] = c->gap;
      cells.push_back(std::move(cj));
    }
    lj["degenerate_cells"] = std::move(cells);
    levels.push_back(std::move(lj));
  }
  j["levels"] = std::move(levels);
  j["dimension_estimate"] = r.dimension_estimate ? json(*r.dimension_estimate) : json(nullptr);
  j["warnings"] = r.warnings;
  if (r.chern) j["chern"] = to_json(*r.chern);
  if (r.certificate) j["certificate"] = to_json(*r.certificate);
  return j;
}

/// Writes `content` to `path` via a temporary file and rename, so readers
/// never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IOError", "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("IOError", "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// One row per degenerate cell of every scan level.
inline std::string degeneracy_csv(const ScanReport& r) {
  std::ostringstream os;
  os << "resolution";
  for (std::size_t j = 0; j < r.k; ++j) os << ",i" << (j + 1);
  for (std::size_t j = 0; j < r.k; ++j) os << ",theta" << (j + 1);
  os << ",kernel_dim,gap\n";
  for (const auto& l : r.levels)
    for (const ScanCell* c : l.degenerate_cells()) {
      os << l.resolution;
      for (auto i : c->index) os << "," << i;
      for (double a : c->angles) os << "," << format_double(a);
      os << "," << c->kernel_dim << "," << format_double(c->gap) << "\n";
    }
  return os.str();
}

/// Columns: angles of the cell center, then the gap. Blank line after each
/// run of the first index, as gnuplot's pm3d expects for k = 2.
inline std::string degeneracy_map_dat(const ScanLevel& level) {
  std::ostringstream os;
  os << "# resolution " << level.resolution << "\n# theta... gap\n";
  for (std::size_t c = 0; c < level.cells.size(); ++c) {
    const ScanCell& cell = level.cells[c];
    for (double a : cell.angles) os << format_double(a) << " ";
    os << format_double(cell.gap) << "\n";
    if ((c + 1) % level.resolution == 0) os << "\n";
  }
  return os.str();
}

inline std::string gap_profile_dat(const std::vector<double>& s, const std::vector<double>& gap) {
  std::ostringstream os;
  os << "# s gap\n";
  for (std::size_t i = 0; i < s.size(); ++i) os << format_double(s[i]) << " " << format_double(gap[i]) << "\n";
  return os.str();
}

}  // namespace hamflow
