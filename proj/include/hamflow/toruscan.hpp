#pragma once

// The bifurcation invariant on T^k: loop spectral flows along coordinate
// loops (the Chern vector), a certificate for the bifurcation hypotheses and
// a grid scan of the linearized degeneracy set.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hamflow/boundary.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/sflow.hpp"
#include "hamflow/systems.hpp"

namespace hamflow {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results must be
/// written by index; the exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t count, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct ScanOptions {
  BoundaryOptions boundary;
  CrossingSearch search;
  std::size_t workers = 1;
  std::size_t probe = 64;     // base-point shifts tried per coordinate loop
  double base_gap = 1e-3;     // a loop base point needs at least this gap
};

struct ChernVector {
  std::vector<int> components;
  std::vector<double> shifts;  // base-point shift applied to each loop
  std::vector<SflResult> loops;

  bool nonzero() const {
    return std::any_of(components.begin(), components.end(), [](int c) { return c != 0; });
  }
};

namespace detail {

// First shift on the probe grid 0, 2pi/m, -2pi/m, 4pi/m, ... at which the
// loop start is non-degenerate.
inline double loop_shift(const HamiltonianFamily& family, std::size_t j, const TorusPoint& base,
                         const ScanOptions& opts) {
  const double step = 2.0 * std::numbers::pi / static_cast<double>(opts.probe);
  for (std::size_t i = 0; i < opts.probe; ++i) {
    const double mag = static_cast<double>((i + 1) / 2) * step;
    const double shift = i % 2 == 1 ? mag : -mag;
    const TorusPoint start = base.with(j, -std::numbers::pi + shift);
    try {
      if (degeneracy_gap(boundary_data(family, start, opts.boundary)) > opts.base_gap) return shift;
    } catch (const HyperbolicityError&) {
    }
  }
  throw BasePointError("no non-degenerate base point found for loop " + std::to_string(j + 1) +
                       " on a " + std::to_string(opts.probe) + "-point probe");
}

}  // namespace detail

inline SflResult loop_sfl(const HamiltonianFamily& family, std::size_t j, const TorusPoint& base,
                          double shift, const ScanOptions& opts) {
  const auto path = HomoclinicPath::coordinate_loop(family, j, base, opts.boundary, shift);
  return sfl_crossing(path, opts.search);
}

/// Spectral flow along each coordinate loop through `base`.
inline ChernVector chern_vector(const HamiltonianFamily& family, const TorusPoint& base,
                                const ScanOptions& opts = {}) {
  if (base.dim() != family.k) throw ValidationError("base point dimension differs from the family");
  ChernVector cv;
  cv.components.assign(family.k, 0);
  cv.shifts.assign(family.k, 0.0);
  cv.loops.resize(family.k);
  parallel_for(family.k, opts.workers, [&](std::size_t j) {
    cv.shifts[j] = detail::loop_shift(family, j, base, opts);
    cv.loops[j] = loop_sfl(family, j, base, cv.shifts[j], opts);
    cv.components[j] = cv.loops[j].value;
  });
  return cv;
}

inline ChernVector chern_vector(const HamiltonianFamily& family, const ScanOptions& opts = {}) {
  return chern_vector(family, TorusPoint::origin(family.k), opts);
}

struct Certificate {
  TorusPoint invertible_point;
  double gap = 0.0;
  std::size_t nonzero_component = 0;  // 1-based
  int value = 0;
  ChernVector chern;
  std::string conclusion;
};

/// Checks hypotheses (i) an invertible parameter value and (ii) a nonzero
/// Chern component, each recomputed with different numerics before the
/// certificate is issued.
inline Certificate certify(const HamiltonianFamily& family, const ScanOptions& opts = {}) {
  const std::size_t k = family.k;
  // Coarse grid {0, pi/2, pi, -pi/2} per axis, first axis varying fastest.
  constexpr std::size_t kCoarse = 4;
  std::size_t total = 1;
  for (std::size_t j = 0; j < k; ++j) total *= kCoarse;
  std::vector<TorusPoint> points;
  std::vector<double> gaps(total, -1.0);
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<double> a(k);
    std::size_t rem = c;
    for (std::size_t j = 0; j < k; ++j) {
      a[j] = static_cast<double>(rem % kCoarse) * std::numbers::pi / 2.0;
      rem /= kCoarse;
    }
    points.emplace_back(a);
  }
  parallel_for(total, opts.workers, [&](std::size_t c) {
    try {
      const BoundaryData bd = boundary_data(family, points[c], opts.boundary);
      if (kernel_dim(bd, opts.boundary.intersection_tol) == 0) gaps[c] = degeneracy_gap(bd);
    } catch (const HyperbolicityError&) {
    }
  });
  std::size_t best = total;
  for (std::size_t c = 0; c < total; ++c)
    if (gaps[c] > 0.0 && (best == total || gaps[c] > gaps[best] + 1e-9)) best = c;
  if (best == total)
    throw CertificateUnavailable(
        "hypothesis (i) fails: the linearization has a kernel at every coarse grid point");

  Certificate cert;
  cert.invertible_point = points[best];
  cert.gap = gaps[best];
  {
    BoundaryOptions again = opts.boundary;
    again.horizon *= 1.5;
    again.horizon_max *= 1.5;
    if (kernel_dim(boundary_data(family, cert.invertible_point, again), again.intersection_tol) != 0)
      throw CertificateUnavailable("hypothesis (i) not confirmed on recomputation");
  }

  cert.chern = chern_vector(family, TorusPoint::origin(k), opts);
  std::size_t j = 0;
  while (j < k && cert.chern.components[j] == 0) ++j;
  if (j == k)
    throw CertificateUnavailable("hypothesis (ii) fails: every coordinate loop has spectral flow 0");
  ScanOptions again = opts;
  again.search.grid = opts.search.grid + 33;
  const int recheck = loop_sfl(family, j, TorusPoint::origin(k), cert.chern.shifts[j], again).value;
  if (recheck != cert.chern.components[j])
    throw CertificateUnavailable("hypothesis (ii) not confirmed on recomputation");
  cert.nonzero_component = j + 1;
  cert.value = cert.chern.components[j];

  std::ostringstream os;
  os << "L is invertible at (";
  for (std::size_t i = 0; i < k; ++i) os << (i ? ", " : "") << cert.invertible_point[i];
  os << ") and the first Chern class of the index bundle is nonzero (loop " << cert.nonzero_component
     << " has spectral flow " << cert.value << "). Hence the set B of bifurcation points has covering"
     << " dimension at least " << (k - 1) << " and is not contractible to a point.";
  cert.conclusion = os.str();
  return cert;
}

struct ScanCell {
  std::vector<std::size_t> index;
  std::vector<double> angles;
  std::size_t kernel_dim = 0;
  double gap = 0.0;
};

struct ScanLevel {
  std::size_t resolution = 0;
  std::vector<ScanCell> cells;  // every cell, row-major with the first axis fastest
  std::size_t degenerate_count() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const ScanCell& c) { return c.kernel_dim > 0; }));
  }
  std::vector<const ScanCell*> degenerate_cells() const {
    std::vector<const ScanCell*> out;
    for (const auto& c : cells)
      if (c.kernel_dim > 0) out.push_back(&c);
    return out;
  }
};

struct ScanReport {
  std::size_t k = 0;
  std::vector<ScanLevel> levels;  // resolutions r, 2r, 4r
  std::optional<double> dimension_estimate;
  std::vector<std::string> warnings;
  std::optional<ChernVector> chern;
  std::optional<Certificate> certificate;
};

/// Least-squares slope of log(count) against log(resolution).
inline std::optional<double> box_dimension(const std::vector<std::size_t>& resolutions,
                                           const std::vector<std::size_t>& counts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    if (counts[i] == 0) continue;
    const double x = std::log(static_cast<double>(resolutions[i]));
    const double y = std::log(static_cast<double>(counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::nullopt;
  const double den = static_cast<double>(m) * sxx - sx * sx;
  return (static_cast<double>(m) * sxy - sx * sy) / den;
}

inline ScanLevel scan_level(const HamiltonianFamily& family, std::size_t resolution, double tol,
                            const ScanOptions& opts) {
  const std::size_t k = family.k;
  std::size_t total = 1;
  for (std::size_t j = 0; j < k; ++j) total *= resolution;
  const double h = 2.0 * std::numbers::pi / static_cast<double>(resolution);
  ScanLevel level;
  level.resolution = resolution;
  level.cells.resize(total);
  parallel_for(total, opts.workers, [&](std::size_t c) {
    ScanCell& cell = level.cells[c];
    cell.index.resize(k);
    cell.angles.resize(k);
    std::size_t rem = c;
    for (std::size_t j = 0; j < k; ++j) {
      cell.index[j] = rem % resolution;
      rem /= resolution;
      cell.angles[j] = -std::numbers::pi + (static_cast<double>(cell.index[j]) + 0.5) * h;
    }
    const BoundaryData bd = boundary_data(family, TorusPoint(cell.angles), opts.boundary);
    cell.kernel_dim = kernel_dim(bd, tol);
    cell.gap = degeneracy_gap(bd);
  });
  return level;
}

/// Kernel dimension at the cell centers of the grids r, 2r and 4r and a
/// box-counting dimension of the flagged set. This is the degeneracy set of
/// the linearization, a superset of where bifurcation can occur.
inline ScanReport scan_degeneracy(const HamiltonianFamily& family, std::size_t resolution,
                                  double tol = kRankTol, const ScanOptions& opts = {}) {
  if (resolution < 8) throw ValidationError("scan resolution must be at least 8");
  ScanReport rep;
  rep.k = family.k;
  std::vector<std::size_t> res, counts;
  for (std::size_t r : {resolution, 2 * resolution, 4 * resolution}) {
    rep.levels.push_back(scan_level(family, r, tol, opts));
    res.push_back(r);
    counts.push_back(rep.levels.back().degenerate_count());
  }
  for (std::size_t i = 0; i + 1 < counts.size(); ++i)
    if (counts[i + 1] < counts[i])
      rep.warnings.push_back("box counts are not monotone between resolutions " + std::to_string(res[i]) +
                             " and " + std::to_string(res[i + 1]));
  if (counts.back() == 0) {
    rep.warnings.push_back("degenerate set is empty at every resolution; no dimension estimate");
  } else {
    rep.dimension_estimate = box_dimension(res, counts);
    if (!rep.dimension_estimate)
      rep.warnings.push_back("degenerate set seen at fewer than two resolutions; no dimension estimate");
  }
  return rep;
}

}  // namespace hamflow
