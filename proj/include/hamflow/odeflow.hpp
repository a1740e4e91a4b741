#pragma once

// Frames of solutions of u' = J A(lambda, t) u, propagated by classical RK4
// with QR renormalization, plus solution residuals.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hamflow/errors.hpp"
#include "hamflow/matlib.hpp"
#include "hamflow/systems.hpp"

namespace hamflow {

struct StepControl {
  double h0 = 0.05;          // initial RK4 step
  double angle_tol = 1e-9;   // halving stops when successive subspaces agree to this angle
  int max_halvings = 12;
  double cond_limit = 1e3;   // re-orthonormalize once the frame drifts this far
};

/// Orthonormal frame at time t; exp(log_scale) is the volume growth that
/// renormalization discarded.
struct TrajectoryFrame {
  double t = 0.0;
  Frame frame;
  double log_scale = 0.0;
};

struct SampledSolution {
  Vector times;
  std::vector<Vector> values;

  void validate() const {
    if (times.size() != values.size()) throw ValidationError("times and values differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw ValidationError("sample times must increase strictly");
    for (const auto& v : values)
      for (double x : v)
        if (!std::isfinite(x)) throw ValidationError("non-finite sample value");
  }
};

namespace detail {

struct Rk4Workspace {
  Matrix k, acc, tmp;
};

inline void rk4_step(const HamiltonianFamily::Frozen& ja, double t, double h, Matrix& w,
                     Rk4Workspace& ws) {
  auto axpy = [](Matrix& out, const Matrix& x, double a, const Matrix& y) {
    if (out.rows() != x.rows() || out.cols() != x.cols()) out = Matrix(x.rows(), x.cols());
    auto o = out.raw();
    auto xr = x.raw(), yr = y.raw();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = xr[i] + a * yr[i];
  };
  auto accumulate = [](Matrix& out, double a, const Matrix& y) {
    auto o = out.raw();
    auto yr = y.raw();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += a * yr[i];
  };
  const Matrix m0 = ja(t);
  const Matrix mh = ja(t + 0.5 * h);
  const Matrix m1 = ja(t + h);
  multiply_into(ws.k, m0, w);
  ws.acc = ws.k;
  axpy(ws.tmp, w, 0.5 * h, ws.k);
  multiply_into(ws.k, mh, ws.tmp);
  accumulate(ws.acc, 2.0, ws.k);
  axpy(ws.tmp, w, 0.5 * h, ws.k);
  multiply_into(ws.k, mh, ws.tmp);
  accumulate(ws.acc, 2.0, ws.k);
  axpy(ws.tmp, w, h, ws.k);
  multiply_into(ws.k, m1, ws.tmp);
  accumulate(ws.acc, 1.0, ws.k);
  accumulate(w, h / 6.0, ws.acc);
}

inline void rk4_step(const HamiltonianFamily& family, const TorusPoint& lambda, double t, double h,
                     Matrix& w) {
  Rk4Workspace ws;
  rk4_step(family.frozen_JA(lambda), t, h, w, ws);
}

/// Replaces w by its Q factor when it is far from orthonormal (or always,
/// when forced); accumulates log |det R|.
inline void renormalize(Matrix& w, double& log_scale, double cond_limit, bool force) {
  QR qr = qr_decompose(w);
  double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < qr.r.rows(); ++i) {
    rmax = std::max(rmax, qr.r(i, i));
    rmin = std::min(rmin, qr.r(i, i));
  }
  const double drift = std::max({rmax / rmin, rmax, 1.0 / rmin});
  if (!force && drift <= cond_limit) return;
  for (std::size_t i = 0; i < qr.r.rows(); ++i) log_scale += std::log(qr.r(i, i));
  w = std::move(qr.q);
}

/// Integration between t0 and t1 with nominal step h, never straddling a
/// breakpoint of the family.
inline void integrate(const HamiltonianFamily& family, const TorusPoint& lambda, Matrix& w,
                      double& log_scale, double t0, double t1, double h, double cond_limit) {
  std::vector<double> nodes{t0};
  for (double b : family.breakpoints)
    if ((b - t0) * (t1 - b) > 0.0) nodes.push_back(b);
  nodes.push_back(t1);
  if (t1 < t0) std::sort(nodes.begin() + 1, nodes.end() - 1, std::greater<>());
  else std::sort(nodes.begin() + 1, nodes.end() - 1);

  const auto ja = family.frozen_JA(lambda);
  Rk4Workspace ws;
  for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
    const double span = nodes[s + 1] - nodes[s];
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(span) / h - 1e-9)));
    const double dt = span / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      rk4_step(ja, nodes[s] + static_cast<double>(i) * dt, dt, w, ws);
      if (!w.all_finite()) throw NumericalError("non-finite values during propagation");
      renormalize(w, log_scale, cond_limit, false);
    }
  }
}

}  // namespace detail

/// Image of the start subspace under the flow of u' = J A(lambda, t) u at
/// time t_end. The RK4 step is halved until two successive answers agree
/// to step.angle_tol in subspace angle.
inline TrajectoryFrame propagate(const HamiltonianFamily& family, const TorusPoint& lambda,
                                 const TrajectoryFrame& start, double t_end,
                                 const StepControl& step = {}) {
  if (t_end == start.t) return start;
  if (!std::isfinite(t_end)) throw NumericalError("non-finite end time");
  auto run = [&](double h) {
    Matrix w = start.frame.columns();
    double log_scale = start.log_scale;
    detail::integrate(family, lambda, w, log_scale, start.t, t_end, h, step.cond_limit);
    detail::renormalize(w, log_scale, step.cond_limit, true);
    return TrajectoryFrame{t_end, Frame(std::move(w), 1e-8), log_scale};
  };
  double h = step.h0;
  TrajectoryFrame prev = run(h);
  for (int i = 0; i < step.max_halvings; ++i) {
    h *= 0.5;
    TrajectoryFrame cur = run(h);
    if (subspace_angle(prev.frame, cur.frame) < step.angle_tol) return cur;
    prev = std::move(cur);
  }
  throw NumericalError("RK4 step refinement did not converge");
}

/// Frames on a uniform grid from t0 to t1 with QR at every step:
/// Psi(times[i], times[i-1]) frames[i-1] = frames[i] * transfers[i],
/// where Psi is the RK4 step map.
struct Sweep {
  Vector times;
  std::vector<Matrix> frames;
  std::vector<Matrix> transfers;  // transfers[0] is unused
};

inline Sweep sweep(const HamiltonianFamily& family, const TorusPoint& lambda, const Matrix& start,
                   double t0, double t1, std::size_t steps) {
  if (steps == 0) throw ValidationError("sweep needs at least one step");
  Sweep out;
  out.times.reserve(steps + 1);
  out.frames.reserve(steps + 1);
  out.transfers.reserve(steps + 1);
  QR q0 = qr_decompose(start);
  out.times.push_back(t0);
  out.frames.push_back(q0.q);
  out.transfers.push_back(Matrix::identity(start.cols()));
  const double dt = (t1 - t0) / static_cast<double>(steps);
  Matrix w = q0.q;
  const auto ja = family.frozen_JA(lambda);
  detail::Rk4Workspace ws;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = t0 + static_cast<double>(i - 1) * dt;
    detail::rk4_step(ja, t, dt, w, ws);
    if (!w.all_finite()) throw NumericalError("non-finite values during sweep");
    QR qr = qr_decompose(w);
    w = qr.q;
    out.times.push_back(i == steps ? t1 : t0 + static_cast<double>(i) * dt);
    out.frames.push_back(std::move(qr.q));
    out.transfers.push_back(std::move(qr.r));
  }
  return out;
}

/// max over interior samples of |J u'(t) + A(lambda, t) u(t)|, u' by
/// centered differences, divided by max |u(t)|.
inline double residual(const HamiltonianFamily& family, const TorusPoint& lambda,
                       const SampledSolution& sol) {
  if (sol.times.size() < 5) throw ValidationError("residual needs at least 5 samples");
  sol.validate();
  double umax = 0.0;
  for (const auto& u : sol.values) umax = std::max(umax, norm2(u));
  if (!(umax > 0.0)) throw ValidationError("residual of the zero function");
  const std::size_t dim = family.dim();
  double worst = 0.0;
  Vector du(dim);
  for (std::size_t i = 1; i + 1 < sol.times.size(); ++i) {
    const double dt = sol.times[i + 1] - sol.times[i - 1];
    for (std::size_t c = 0; c < dim; ++c) du[c] = (sol.values[i + 1][c] - sol.values[i - 1][c]) / dt;
    const Vector jdu = apply_j(Matrix::column(du)).col(0);
    const Vector au = family.A(lambda, sol.times[i]) * sol.values[i];
    double r = 0.0;
    for (std::size_t c = 0; c < dim; ++c) r += (jdu[c] + au[c]) * (jdu[c] + au[c]);
    worst = std::max(worst, std::sqrt(r));
  }
  return worst / umax;
}

}  // namespace hamflow
