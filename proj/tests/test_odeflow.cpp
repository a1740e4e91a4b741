#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hamflow/odeflow.hpp"

using namespace hamflow;

namespace {

constexpr double kPi = std::numbers::pi;

// Antiderivative of atan vanishing at 0.
double atan_integral(double t) { return t * std::atan(t) - 0.5 * std::log1p(t * t); }

SampledSolution sample(double t0, double t1, std::size_t n, const std::function<Vector(double)>& u) {
  SampledSolution s;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n);
    s.times.push_back(t);
    s.values.push_back(u(t));
  }
  return s;
}

HamiltonianFamily diag_control() { return compact_control_family(1); }

HamiltonianFamily two_plane_family() {
  ComposedTerm a;
  a.profile = Profile::Arctan;
  a.matrix = TermMatrix::JS;
  a.angle_weights = {1.0};
  ComposedTerm b = a;
  b.profile = Profile::Tanh;
  b.plane = 1;
  b.angle_weights = {-1.0};
  ComposedTerm c;
  c.profile = Profile::Sech;
  c.entries = {0, 0, 0.3, 0, 0, 0, 0, 0.2, 0.3, 0, 0, 0, 0, 0.2, 0, 0};
  return composed_family(2, 1, {a, b, c});
}

}  // namespace

TEST(Propagate, ExponentialDecayOfStableDirection) {
  const auto f = diag_control();
  const TrajectoryFrame start{0.0, Frame(Matrix{{1.0}, {0.0}}), 0.0};
  const auto end = propagate(f, TorusPoint({0.0}), start, 1.0);
  EXPECT_NEAR(end.log_scale, -1.0, 1e-8);
  EXPECT_NEAR(std::abs(end.frame.columns()(0, 0)), 1.0, 1e-12);
}

TEST(Propagate, GenericDirectionAlignsWithUnstable) {
  const auto f = diag_control();
  const double r = 1.0 / std::sqrt(2.0);
  const TrajectoryFrame start{0.0, Frame(Matrix{{r}, {r}}), 0.0};
  const auto end = propagate(f, TorusPoint({0.0}), start, 5.0);
  const Frame e2(Matrix{{0.0}, {1.0}});
  EXPECT_LT(subspace_angle(end.frame, e2), 1e-4);
  EXPECT_NEAR(end.log_scale, 5.0 + std::log(r), 1e-4);
}

TEST(Propagate, RoundTrip) {
  const auto f = example_family(2);
  const TorusPoint p({0.4, -1.2});
  const Frame e(Matrix{{0.6}, {0.8}});
  const auto there = propagate(f, p, TrajectoryFrame{-1.0, e, 0.0}, 1.5);
  const auto back = propagate(f, p, there, -1.0);
  EXPECT_LT(subspace_angle(back.frame, e), 1e-6);
  EXPECT_NEAR(back.log_scale, 0.0, 1e-6);
  EXPECT_DOUBLE_EQ(back.t, -1.0);
}

TEST(Propagate, RejectsNonFiniteEnd) {
  const auto f = diag_control();
  const TrajectoryFrame start{0.0, Frame(Matrix{{1.0}, {0.0}}), 0.0};
  EXPECT_THROW(propagate(f, TorusPoint({0.0}), start, std::numeric_limits<double>::infinity()),
               NumericalError);
  EXPECT_DOUBLE_EQ(propagate(f, TorusPoint({0.0}), start, 0.0).log_scale, 0.0);
}

TEST(Residual, ClosedFormSolutionsAreSmall) {
  const auto f = example_family(1);
  // t < 0: u_* = exp(-int_0^t atan) e1 spans the unstable direction.
  const auto neg = sample(-10.0, 0.0, 10000, [](double t) {
    return Vector{std::exp(-atan_integral(t)), 0.0};
  });
  EXPECT_LT(residual(f, TorusPoint({0.0}), neg), 1e-5);
  // t > 0 with Theta = pi/2: u_+ along (cos pi/4, sin pi/4).
  const auto pos = sample(0.0, 10.0, 10000, [](double t) {
    const double m = std::exp(-atan_integral(t));
    return Vector{m * std::cos(kPi / 4), m * std::sin(kPi / 4)};
  });
  EXPECT_LT(residual(f, TorusPoint({kPi / 2}), pos), 1e-5);
}

TEST(Residual, NonSolutionIsLarge) {
  const auto f = example_family(1);
  const auto c = sample(0.0, 10.0, 1000, [](double) { return Vector{1.0, 0.0}; });
  EXPECT_GT(residual(f, TorusPoint({kPi / 2}), c), 0.1);
}

TEST(Residual, InputValidation) {
  const auto f = example_family(1);
  const auto few = sample(0.0, 1.0, 3, [](double) { return Vector{1.0, 0.0}; });
  EXPECT_THROW(residual(f, TorusPoint({0.0}), few), ValidationError);
  auto bad = sample(0.0, 1.0, 10, [](double) { return Vector{1.0, 0.0}; });
  bad.times[4] = bad.times[3];
  EXPECT_THROW(residual(f, TorusPoint({0.0}), bad), ValidationError);
  auto zero = sample(0.0, 1.0, 10, [](double) { return Vector{0.0, 0.0}; });
  EXPECT_THROW(residual(f, TorusPoint({0.0}), zero), ValidationError);
}

TEST(Rk4, PreservesSymplecticForm) {
  const auto f = two_plane_family();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Matrix w(4, 2);
  for (double& x : w.raw()) x = g(rng);
  const double before = symplectic_form(w.col(0), w.col(1));
  double log_scale = 0.0;
  detail::integrate(f, TorusPoint({0.7}), w, log_scale, -2.0, 2.0, 1e-3,
                    std::numeric_limits<double>::infinity());
  EXPECT_DOUBLE_EQ(log_scale, 0.0);
  EXPECT_NEAR(symplectic_form(w.col(0), w.col(1)), before, 1e-9 * std::max(1.0, std::abs(before)));
}

TEST(Propagate, KeepsLagrangianSubspacesLagrangian) {
  const auto f = two_plane_family();
  // span(e1, e2) is Lagrangian for the standard form.
  Matrix m(4, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  const auto end = propagate(f, TorusPoint({-0.3}), TrajectoryFrame{-3.0, Frame(m), 0.0}, 4.0);
  EXPECT_EQ(end.frame.dim(), 2u);
  EXPECT_LT(lagrangian_defect(end.frame.columns()), 1e-8);
}

TEST(Sweep, UnwindsToConsistentFrames) {
  const auto f = example_family(1);
  const TorusPoint p({1.0});
  const Sweep sw = sweep(f, p, Matrix{{0.0}, {1.0}}, 0.0, 2.0, 200);
  ASSERT_EQ(sw.frames.size(), 201u);
  EXPECT_DOUBLE_EQ(sw.times.back(), 2.0);
  Matrix w{{0.0}, {1.0}};
  detail::Rk4Workspace ws;
  const auto ja = f.frozen_JA(p);
  for (std::size_t i = 1; i <= 200; ++i) {
    detail::rk4_step(ja, sw.times[i - 1], 0.01, w, ws);
    // w = frames[i] * (product of transfers), so w and frames[i] span the same line.
    EXPECT_LT(subspace_angle(Frame(sw.frames[i], 1e-10), orthonormal_range(w, 1)), 1e-10);
  }
  EXPECT_THROW(sweep(f, p, Matrix{{1.0}, {0.0}}, 0.0, 1.0, 0), ValidationError);
}
