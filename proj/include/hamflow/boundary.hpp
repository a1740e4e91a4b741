#pragma once

// Stable/unstable subspaces E^s(lambda, 0), E^u(lambda, 0) of the linear
// system J u' + A(lambda, t) u = 0 and its homoclinic (kernel) solutions.

#include <cmath>
#include <utility>
#include <vector>

#include "hamflow/errors.hpp"
#include "hamflow/matlib.hpp"
#include "hamflow/odeflow.hpp"
#include "hamflow/systems.hpp"

namespace hamflow {

struct BoundaryOptions {
  double horizon = 40.0;
  double horizon_max = 320.0;
  double accept_angle = 1e-5;
  double hyperbolic_tol = 1e-8;
  double intersection_tol = kRankTol;
  double sample_step = 5e-3;  // grid of kernel trajectories
  StepControl step;
};

struct SubspaceEstimate {
  Frame frame;
  double horizon = 0.0;
  double error_estimate = 0.0;
};

struct BoundaryData {
  TorusPoint lambda;
  Frame Es;
  Frame Eu;
  double horizon_T = 0.0;
  double init_error_estimate = 0.0;
};

struct KernelBasis {
  std::size_t dim = 0;
  Frame directions;
  std::vector<SampledSolution> trajectories;  // unit discrete L2 norm on [-T, T]
};

namespace detail {

// side = +1: stable space (shoot backward from +T); side = -1: unstable
// space (shoot forward from -T).
inline Frame shoot(const HamiltonianFamily& family, const TorusPoint& lambda, double horizon,
                   int side, const BoundaryOptions& opts) {
  const double t0 = side * horizon;
  const Matrix m = family.JA(lambda, t0);
  Frame init = side > 0 ? stable_projector(m, opts.hyperbolic_tol)
                        : stable_projector(-m, opts.hyperbolic_tol);
  if (init.dim() != family.n)
    throw NumericalError("asymptotic subspace has dimension " + std::to_string(init.dim()) +
                         ", expected " + std::to_string(family.n));
  return propagate(family, lambda, TrajectoryFrame{t0, std::move(init), 0.0}, 0.0, opts.step).frame;
}

inline Matrix projector(const Frame& f) { return f.columns() * f.columns().transpose(); }

inline SubspaceEstimate asymptotic_space(const HamiltonianFamily& family, const TorusPoint& lambda,
                                         const BoundaryOptions& opts, int side) {
  const auto hyp = check_hyperbolic(family, lambda, opts.hyperbolic_tol);
  if (!hyp.ok)
    throw HyperbolicityError("asymptotic matrices are not hyperbolic (gap " +
                             std::to_string(hyp.min_real_gap) + ")");
  std::vector<std::pair<double, Frame>> levels;
  double T = opts.horizon;
  levels.emplace_back(T, shoot(family, lambda, T, side, opts));
  while (true) {
    const double T2 = 2.0 * T;
    levels.emplace_back(T2, shoot(family, lambda, T2, side, opts));
    const double angle = subspace_angle(levels[levels.size() - 2].second, levels.back().second);
    if (angle <= opts.accept_angle) return {levels.back().second, T2, angle};
    if (T2 >= opts.horizon_max) break;
    T = T2;
  }
  // Initialization error decays like 1/T: extrapolate the projectors.
  auto extrapolate = [&](std::size_t i) {
    const Matrix p = 2.0 * projector(levels[i].second) - projector(levels[i - 1].second);
    return orthonormal_range(0.5 * (p + p.transpose()), family.n);
  };
  const std::size_t last = levels.size() - 1;
  Frame best = extrapolate(last);
  const double estimate = last >= 2 ? subspace_angle(best, extrapolate(last - 1))
                                    : subspace_angle(best, levels[last].second);
  if (estimate <= opts.accept_angle) return {std::move(best), levels[last].first, estimate};
  throw ConvergenceError("asymptotic subspace not converged at horizon " +
                         std::to_string(levels[last].first) + " (angle " + std::to_string(estimate) +
                         ")");
}

// Solves R x = b for upper-triangular R.
inline Vector upper_solve(const Matrix& r, Vector b) {
  for (std::size_t i = b.size(); i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < b.size(); ++j) s -= r(i, j) * b[j];
    b[i] = s / r(i, i);
  }
  return b;
}

// Values Q_i c_i of the solution through v along a recorded sweep that ends
// at t = 0: c_last = Q_last^T v, c_{i-1} = R_i^{-1} c_i.
inline std::vector<Vector> unwind(const Sweep& sw, const Vector& v) {
  const std::size_t last = sw.frames.size() - 1;
  std::vector<Vector> out(last + 1);
  Vector c = sw.frames[last].transpose() * v;
  for (std::size_t i = last + 1; i-- > 0;) {
    out[i] = sw.frames[i] * c;
    if (i > 0) c = upper_solve(sw.transfers[i], std::move(c));
  }
  return out;
}

}  // namespace detail

/// Composite Simpson weights for an odd number of uniform samples.
inline Vector simpson_weights(std::size_t points, double h) {
  if (points < 3 || points % 2 == 0) throw ValidationError("Simpson needs an odd number >= 3 of points");
  Vector w(points, 2.0 * h / 3.0);
  for (std::size_t i = 1; i < points; i += 2) w[i] = 4.0 * h / 3.0;
  w.front() = w.back() = h / 3.0;
  return w;
}

inline SubspaceEstimate stable_space(const HamiltonianFamily& family, const TorusPoint& lambda,
                                     const BoundaryOptions& opts = {}) {
  return detail::asymptotic_space(family, lambda, opts, +1);
}

inline SubspaceEstimate unstable_space(const HamiltonianFamily& family, const TorusPoint& lambda,
                                       const BoundaryOptions& opts = {}) {
  return detail::asymptotic_space(family, lambda, opts, -1);
}

inline BoundaryData boundary_data(const HamiltonianFamily& family, const TorusPoint& lambda,
                                  const BoundaryOptions& opts = {}) {
  if (lambda.dim() != family.k) throw ValidationError("parameter point has the wrong dimension");
  SubspaceEstimate s = stable_space(family, lambda, opts);
  SubspaceEstimate u = unstable_space(family, lambda, opts);
  if (lagrangian_defect(s.frame.columns()) > 1e-6 || lagrangian_defect(u.frame.columns()) > 1e-6)
    throw NumericalError("asymptotic subspace is not Lagrangian");
  return {lambda, std::move(s.frame), std::move(u.frame), std::max(s.horizon, u.horizon),
          std::max(s.error_estimate, u.error_estimate)};
}

/// Sine of the smallest principal angle between E^s and E^u; zero exactly
/// when the linearization has a kernel.
inline double degeneracy_gap(const BoundaryData& bd) { return min_principal_sine(bd.Es, bd.Eu); }

inline std::size_t kernel_dim(const BoundaryData& bd, double tol = kRankTol) {
  return intersection(bd.Eu, bd.Es, tol).dim;
}

/// Homoclinic solutions through each direction of E^u cap E^s, sampled on
/// [-T, T]. Each half line is recovered from a QR sweep that integrates in
/// the direction where the sought solution dominates.
inline KernelBasis kernel_solutions(const HamiltonianFamily& family, const BoundaryData& bd,
                                    const BoundaryOptions& opts = {}) {
  const Intersection inter = intersection(bd.Eu, bd.Es, opts.intersection_tol);
  KernelBasis kb{inter.dim, inter.basis, {}};
  if (kb.dim == 0) return kb;

  const double T = opts.horizon;
  // Even, so that Simpson panels never straddle t = 0.
  auto steps = static_cast<std::size_t>(std::ceil(T / opts.sample_step));
  steps += steps % 2;
  const TorusPoint& lambda = bd.lambda;
  const Matrix init_s = stable_projector(family.JA(lambda, T), opts.hyperbolic_tol).columns();
  const Matrix init_u = stable_projector(-family.JA(lambda, -T), opts.hyperbolic_tol).columns();
  const Sweep forward = sweep(family, lambda, init_s, T, 0.0, steps);   // t: T -> 0
  const Sweep backward = sweep(family, lambda, init_u, -T, 0.0, steps); // t: -T -> 0
  const Vector weights = simpson_weights(2 * steps + 1, T / static_cast<double>(steps));

  for (std::size_t d = 0; d < kb.dim; ++d) {
    const Vector v = kb.directions.col(d);
    const auto pos = detail::unwind(forward, v);
    const auto neg = detail::unwind(backward, v);
    SampledSolution sol;
    sol.times.reserve(2 * steps + 1);
    sol.values.reserve(2 * steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
      sol.times.push_back(backward.times[i]);
      sol.values.push_back(neg[i]);
    }
    for (std::size_t i = steps; i-- > 0;) {
      sol.times.push_back(forward.times[i]);
      sol.values.push_back(pos[i]);
    }
    double norm_sq = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < sol.values.size(); ++i) {
      const double m = dot(sol.values[i], sol.values[i]);
      norm_sq += weights[i] * m;
      peak = std::max(peak, std::sqrt(m));
    }
    const double scale = 1.0 / std::sqrt(norm_sq);
    for (auto& u : sol.values)
      for (double& x : u) x *= scale;
    peak *= scale;
    if (norm2(sol.values.front()) > 1e-3 * peak || norm2(sol.values.back()) > 1e-3 * peak)
      throw InconsistentKernelError("kernel trajectory does not decay at the horizon");
    kb.trajectories.push_back(std::move(sol));
  }
  return kb;
}

inline KernelBasis kernel_solutions(const HamiltonianFamily& family, const TorusPoint& lambda,
                                    const BoundaryOptions& opts = {}) {
  return kernel_solutions(family, boundary_data(family, lambda, opts), opts);
}

}  // namespace hamflow
