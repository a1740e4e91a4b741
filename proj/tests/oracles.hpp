#pragma once

// Independent reference values. Nothing here uses the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

// Adaptive Simpson with Richardson correction.
inline double integrate(const std::function<double(double)>& f, double a, double b, double eps = 1e-13) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double tol, int depth) {
        const double mid = 0.5 * (lo + hi);
        const double flm = f(0.5 * (lo + mid)), frm = f(0.5 * (mid + hi));
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
          return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1) +
               rec(mid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1);
      };
  // Unit-width pieces, so a peaked integrand cannot slip between the first samples.
  const int pieces = std::max(1, static_cast<int>(std::ceil(b - a)));
  const double h = (b - a) / pieces;
  double sum = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + i * h, hi = i + 1 == pieces ? b : lo + h;
    const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
    sum += rec(lo, hi, flo, fm, fhi, (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi), eps / pieces, 60);
  }
  return sum;
}

// |u_*(t)|^2 for u_*(t) = sqrt(t^2 + 1) exp(-t atan t) e1.
inline double kernel_weight(double t) { return (t * t + 1.0) * std::exp(-2.0 * t * std::atan(t)); }

// int_0^T atan(t) (t^2+1) exp(-2 t atan t) dt. The integrand decays like
// t^3 exp(-pi t), so the tail beyond T is below (T^3 + 1) exp(-pi T + 2).
inline double iq(double T = 60.0) {
  return integrate([](double t) { return std::atan(t) * kernel_weight(t); }, 0.0, T);
}

inline double iq_tail_bound(double T) { return (T * T * T + 1.0) * std::exp(-std::numbers::pi * T + 2.0); }

// int_{-T}^{T} |u_*|^2 dt.
inline double kernel_norm_sq(double T = 60.0) { return 2.0 * integrate(kernel_weight, 0.0, T); }

// Crossing form of the example family at Theta_1 = 0 along the Theta_1
// loop, for the L2-normalized kernel trajectory on [-T, T].
inline double example_crossing_form(double T = 60.0) {
  return -integrate([](double t) { return std::atan(t) * kernel_weight(t); }, 0.0, T) / kernel_norm_sq(T);
}

// Values obtained independently with 30-digit arithmetic.
inline constexpr double kIq = 0.5;
inline constexpr double kNormSq = 1.95858024032484551787764244543;
inline constexpr double kForm = -0.255286962313615077889187486132;

// Closed-form kernel condition of the example family: E^s(Theta) =
// span(cos(phi/2), sin(phi/2)), E^u = span(e1), phi = sum of the angles.
inline double example_gap(double angle_sum) { return std::abs(std::sin(angle_sum / 2.0)); }

inline bool example_degenerate(double angle_sum, double tol = 1e-9) {
  return std::abs(std::remainder(angle_sum, 2.0 * std::numbers::pi)) < tol;
}

}  // namespace oracle
