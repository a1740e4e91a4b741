#pragma once

// Hamiltonian families lambda -> A(lambda, t) over the torus T^k: the
// arctan-ramp example with a nonvanishing invariant, a constant negative
// control, and families composed from built-in profiles.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hamflow/errors.hpp"
#include "hamflow/matlib.hpp"
#include "hamflow/matrix.hpp"

namespace hamflow {

/// Point (Theta_1, ..., Theta_k) of T^k. Angles outside [-pi, pi] are
/// wrapped on construction; +pi and -pi denote the same point.
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(std::vector<double> angles) : angles_(std::move(angles)) {
    for (double& a : angles_) {
      if (!std::isfinite(a)) throw ValidationError("non-finite torus angle");
      a = wrap(a);
    }
  }
  static TorusPoint origin(std::size_t k) { return TorusPoint(std::vector<double>(k, 0.0)); }

  /// Representative of an angle in [-pi, pi] (values already there are kept).
  static double wrap(double a) {
    constexpr double pi = std::numbers::pi;
    if (a >= -pi && a <= pi) return a;
    double r = std::fmod(a + pi, 2.0 * pi);
    if (r < 0.0) r += 2.0 * pi;
    return r - pi;
  }
  /// Signed angle difference b - a reduced to (-pi, pi].
  static double arc(double a, double b) {
    constexpr double pi = std::numbers::pi;
    double d = std::fmod(b - a, 2.0 * pi);
    if (d <= -pi) d += 2.0 * pi;
    if (d > pi) d -= 2.0 * pi;
    return d;
  }

  std::size_t dim() const noexcept { return angles_.size(); }
  double operator[](std::size_t j) const { return angles_[j]; }
  std::span<const double> angles() const noexcept { return angles_; }
  double sum() const {
    double s = 0.0;
    for (double a : angles_) s += a;
    return s;
  }
  TorusPoint with(std::size_t j, double angle) const {
    auto a = angles_;
    a.at(j) = angle;
    return TorusPoint(std::move(a));
  }
  bool equivalent(const TorusPoint& o, double tol = 1e-12) const {
    if (o.dim() != dim()) return false;
    for (std::size_t j = 0; j < dim(); ++j)
      if (std::abs(arc(angles_[j], o.angles_[j])) > tol) return false;
    return true;
  }

 private:
  std::vector<double> angles_;
};

/// S_theta = [[cos, sin], [sin, -cos]]: symmetric, trace 0, det -1, S^2 = I.
inline Matrix s_theta(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {{c, s}, {s, -c}};
}

/// Entrywise theta-derivative of S_theta.
inline Matrix s_theta_prime(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {{-s, c}, {c, s}};
}

/// Growth data (p, C, g) for the nonlinearity; stored, never evaluated.
struct GrowthMeta {
  double p = 0.0;
  double C = 0.0;
  std::string g;
};

/// A family of symmetric 2n x 2n coefficient matrices A(lambda, t) over T^k
/// with hyperbolic asymptotics. Immutable after construction; evaluators are
/// pure and safe to call concurrently.
struct HamiltonianFamily {
  using Eval = std::function<Matrix(const TorusPoint&, double)>;
  using DirEval = std::function<Matrix(const TorusPoint&, std::span<const double>, double)>;
  using Limit = std::function<Matrix(const TorusPoint&)>;
  using Frozen = std::function<Matrix(double)>;  // t -> J A(lambda, t) at fixed lambda

  std::string name;
  std::size_t n = 1;
  std::size_t k = 1;
  Eval A;
  DirEval dA;
  Limit A_plus;
  Limit A_minus;
  std::function<double(double)> decay_bound = [](double T) { return 2.0 / T; };
  /// Times where A is not differentiable in t; integrators step onto them.
  std::vector<double> breakpoints;
  std::optional<GrowthMeta> growth;
  /// Optional fast path for integrators: precomputes what depends on lambda only.
  std::function<Frozen(const TorusPoint&)> freeze;

  std::size_t dim() const noexcept { return 2 * n; }
  Matrix JA(const TorusPoint& lambda, double t) const { return apply_j(A(lambda, t)); }
  /// The returned callable refers to this family and must not outlive it.
  Frozen frozen_JA(const TorusPoint& lambda) const {
    if (freeze) return freeze(lambda);
    return [this, lambda](double t) { return JA(lambda, t); };
  }
};

/// Directional parameter derivative of A by central differences.
inline HamiltonianFamily::DirEval central_difference_dA(HamiltonianFamily::Eval a,
                                                        double step = 1e-5) {
  return [a = std::move(a), step](const TorusPoint& lambda, std::span<const double> dir, double t) {
    std::vector<double> up(lambda.angles().begin(), lambda.angles().end());
    std::vector<double> down = up;
    for (std::size_t j = 0; j < up.size(); ++j) {
      up[j] += step * dir[j];
      down[j] -= step * dir[j];
    }
    return (a(TorusPoint(up), t) - a(TorusPoint(down), t)) * (0.5 / step);
  };
}

/// The arctan-ramp family on T^k (n = 1):
///   A = arctan(t) J S_{Theta_1+...+Theta_k}  for t >= 0,
///   A = arctan(t) J S_0                     for t < 0.
inline HamiltonianFamily example_family(std::size_t k) {
  if (k < 1) throw ValidationError("example family needs k >= 1");
  constexpr double half_pi = std::numbers::pi / 2.0;
  HamiltonianFamily f;
  f.name = "example";
  f.n = 1;
  f.k = k;
  f.A = [](const TorusPoint& lambda, double t) {
    const double phi = t >= 0.0 ? lambda.sum() : 0.0;
    return apply_j(s_theta(phi)) * std::atan(t);
  };
  f.dA = [](const TorusPoint& lambda, std::span<const double> dir, double t) {
    if (t < 0.0) return Matrix(2, 2);
    double rate = 0.0;
    for (double d : dir) rate += d;
    return apply_j(s_theta_prime(lambda.sum())) * (rate * std::atan(t));
  };
  f.A_plus = [](const TorusPoint& lambda) { return apply_j(s_theta(lambda.sum())) * half_pi; };
  f.A_minus = [](const TorusPoint&) { return apply_j(s_theta(0.0)) * -half_pi; };
  f.decay_bound = [](double T) { return 2.0 / T; };
  f.breakpoints = {0.0};
  f.freeze = [](const TorusPoint& lambda) -> HamiltonianFamily::Frozen {
    const Matrix pos = apply_j(apply_j(s_theta(lambda.sum())));
    const Matrix neg = apply_j(apply_j(s_theta(0.0)));
    return [pos, neg](double t) { return (t >= 0.0 ? pos : neg) * std::atan(t); };
  };
  return f;
}

/// Constant family with the given symmetric coefficient matrix.
inline HamiltonianFamily constant_family(std::size_t k, const SymMatrix& a0,
                                         std::string name = "constant") {
  if (a0.size() % 2 != 0 || a0.size() == 0)
    throw ValidationError("coefficient matrix must be 2n x 2n");
  HamiltonianFamily f;
  f.name = std::move(name);
  f.n = a0.size() / 2;
  f.k = k;
  const Matrix m = a0.matrix();
  f.A = [m](const TorusPoint&, double) { return m; };
  f.dA = [m](const TorusPoint&, std::span<const double>, double) {
    return Matrix(m.rows(), m.cols());
  };
  f.A_plus = [m](const TorusPoint&) { return m; };
  f.A_minus = f.A_plus;
  f.decay_bound = [](double) { return 0.0; };
  return f;
}

/// Negative control: A constant with J A = diag(-1, 1). Every loop has
/// spectral flow 0.
inline HamiltonianFamily compact_control_family(std::size_t k) {
  if (k < 1) throw ValidationError("compact control family needs k >= 1");
  // J^{-1} = -J, so A0 = -J diag(-1, 1).
  const Matrix a0 = -apply_j(Matrix{{-1.0, 0.0}, {0.0, 1.0}});
  return constant_family(k, SymMatrix(a0), "compact-control");
}

// ---------------------------------------------------------------------------
// Composed families
// ---------------------------------------------------------------------------

enum class Profile { Arctan, Tanh, Sech, Const };
enum class Window { All, Positive, Negative };
enum class TermMatrix { Constant, S, JS };

/// One summand scale * profile(t) * window(t) * M(lambda) of a composed family.
/// For S / JS the 2x2 block S_phi (or J S_phi) sits in the symplectic plane
/// (q_plane, p_plane) with phi = sum_j weights_j Theta_j + offset.
struct ComposedTerm {
  Profile profile = Profile::Const;
  Window window = Window::All;
  double scale = 1.0;
  TermMatrix matrix = TermMatrix::Constant;
  std::size_t plane = 0;
  std::vector<double> angle_weights;
  double angle_offset = 0.0;
  std::vector<double> entries;  // row-major 2n x 2n, Constant only
};

namespace detail {

inline double profile_value(Profile p, double t) {
  switch (p) {
    case Profile::Arctan: return std::atan(t);
    case Profile::Tanh: return std::tanh(t);
    case Profile::Sech: return 1.0 / std::cosh(t);
    case Profile::Const: return 1.0;
  }
  return 0.0;
}

inline double profile_limit(Profile p, int side) {
  switch (p) {
    case Profile::Arctan: return side * std::numbers::pi / 2.0;
    case Profile::Tanh: return side * 1.0;
    case Profile::Sech: return 0.0;
    case Profile::Const: return 1.0;
  }
  return 0.0;
}

// Bound on |profile(+-T) - profile(+-inf)| for T > 0.
inline double profile_tail(Profile p, double T) {
  switch (p) {
    case Profile::Arctan: return 1.0 / T;
    case Profile::Tanh: return 2.0 * std::exp(-2.0 * T);
    case Profile::Sech: return 2.0 * std::exp(-T);
    case Profile::Const: return 0.0;
  }
  return 0.0;
}

inline double window_value(Window w, double t) {
  switch (w) {
    case Window::All: return 1.0;
    case Window::Positive: return t >= 0.0 ? 1.0 : 0.0;
    case Window::Negative: return t < 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

inline double window_limit(Window w, int side) {
  if (w == Window::Positive) return side > 0 ? 1.0 : 0.0;
  if (w == Window::Negative) return side < 0 ? 1.0 : 0.0;
  return 1.0;
}

inline double term_angle(const ComposedTerm& term, const TorusPoint& lambda) {
  double phi = term.angle_offset;
  for (std::size_t j = 0; j < term.angle_weights.size(); ++j)
    phi += term.angle_weights[j] * lambda[j];
  return phi;
}

inline Matrix embed_plane(const Matrix& block, std::size_t n, std::size_t plane) {
  Matrix m(2 * n, 2 * n);
  const std::size_t idx[2] = {plane, n + plane};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) m(idx[a], idx[b]) = block(a, b);
  return m;
}

inline Matrix term_matrix(const ComposedTerm& term, std::size_t n, const TorusPoint& lambda) {
  switch (term.matrix) {
    case TermMatrix::Constant: {
      Matrix m(2 * n, 2 * n);
      std::copy(term.entries.begin(), term.entries.end(), m.raw().begin());
      return m;
    }
    case TermMatrix::S: return embed_plane(s_theta(term_angle(term, lambda)), n, term.plane);
    case TermMatrix::JS:
      return embed_plane(apply_j(s_theta(term_angle(term, lambda))), n, term.plane);
  }
  return {};
}

inline Matrix term_matrix_rate(const ComposedTerm& term, std::size_t n, const TorusPoint& lambda,
                               std::span<const double> dir) {
  if (term.matrix == TermMatrix::Constant) return Matrix(2 * n, 2 * n);
  double rate = 0.0;
  for (std::size_t j = 0; j < term.angle_weights.size(); ++j) rate += term.angle_weights[j] * dir[j];
  const Matrix sp = s_theta_prime(term_angle(term, lambda));
  const Matrix block = term.matrix == TermMatrix::S ? sp : apply_j(sp);
  return embed_plane(block, n, term.plane) * rate;
}

}  // namespace detail

/// Family A(lambda, t) = sum over terms of scale * profile(t) * window(t) * M(lambda).
inline HamiltonianFamily composed_family(std::size_t n, std::size_t k, std::vector<ComposedTerm> terms,
                                         std::string name = "composed") {
  if (n < 1 || k < 1) throw ValidationError("composed family needs n >= 1 and k >= 1");
  bool split = false;
  for (const auto& term : terms) {
    if (term.matrix == TermMatrix::Constant) {
      if (term.entries.size() != 4 * n * n)
        throw ValidationError("constant term needs (2n)^2 entries");
      SymMatrix{detail::term_matrix(term, n, TorusPoint())};  // throws when not symmetric
    } else {
      if (term.plane >= n) throw ValidationError("term plane index out of range");
      if (term.angle_weights.size() != k) throw ValidationError("angle_weights must have k entries");
    }
    if (term.window != Window::All) split = true;
  }
  HamiltonianFamily f;
  f.name = std::move(name);
  f.n = n;
  f.k = k;
  f.A = [terms, n](const TorusPoint& lambda, double t) {
    Matrix a(2 * n, 2 * n);
    for (const auto& term : terms) {
      const double w = term.scale * detail::profile_value(term.profile, t) *
                       detail::window_value(term.window, t);
      if (w != 0.0) a += detail::term_matrix(term, n, lambda) * w;
    }
    return a;
  };
  f.dA = [terms, n](const TorusPoint& lambda, std::span<const double> dir, double t) {
    Matrix a(2 * n, 2 * n);
    for (const auto& term : terms) {
      const double w = term.scale * detail::profile_value(term.profile, t) *
                       detail::window_value(term.window, t);
      if (w != 0.0) a += detail::term_matrix_rate(term, n, lambda, dir) * w;
    }
    return a;
  };
  auto limit = [terms, n](int side) {
    return [terms, n, side](const TorusPoint& lambda) {
      Matrix a(2 * n, 2 * n);
      for (const auto& term : terms) {
        const double w = term.scale * detail::profile_limit(term.profile, side) *
                         detail::window_limit(term.window, side);
        if (w != 0.0) a += detail::term_matrix(term, n, lambda) * w;
      }
      return a;
    };
  };
  f.A_plus = limit(+1);
  f.A_minus = limit(-1);
  f.decay_bound = [terms, n](double T) {
    double b = 0.0;
    for (const auto& term : terms) {
      const double mag = term.matrix == TermMatrix::Constant
                             ? detail::term_matrix(term, n, TorusPoint()).frobenius()
                             : std::sqrt(2.0);
      b += std::abs(term.scale) * mag * detail::profile_tail(term.profile, T);
    }
    return 2.0 * b;
  };
  if (split) f.breakpoints = {0.0};
  return f;
}

/// The arctan-ramp example expressed as composed terms.
inline std::vector<ComposedTerm> example_terms(std::size_t k) {
  ComposedTerm pos;
  pos.profile = Profile::Arctan;
  pos.window = Window::Positive;
  pos.matrix = TermMatrix::JS;
  pos.angle_weights.assign(k, 1.0);
  ComposedTerm neg = pos;
  neg.window = Window::Negative;
  neg.angle_weights.assign(k, 0.0);
  return {pos, neg};
}

struct HyperbolicCheck {
  bool ok = false;
  double min_real_gap = 0.0;
};

/// Both J A_+(lambda) and J A_-(lambda) must keep their spectra at least
/// `tol` away from the imaginary axis.
inline HyperbolicCheck check_hyperbolic(const HamiltonianFamily& family, const TorusPoint& lambda,
                                        double tol = 1e-8) {
  const double gap = std::min(min_real_gap(apply_j(family.A_plus(lambda))),
                              min_real_gap(apply_j(family.A_minus(lambda))));
  return {gap > tol, gap};
}

/// Sampled validation of the family invariants: symmetry of A, decay to
/// the asymptotic matrices at T in {50, 100}, hyperbolicity of the limits.
inline void validate_family(const HamiltonianFamily& family, std::size_t samples = 16,
                            unsigned seed = 7) {
  if (!family.A || !family.A_plus || !family.A_minus || !family.dA)
    throw ValidationError("family '" + family.name + "' is missing an evaluator");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> time(-20.0, 20.0);
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> a(family.k);
    for (double& x : a) x = angle(rng);
    const TorusPoint lambda(a);
    const Matrix m = family.A(lambda, time(rng));
    if (m.rows() != family.dim() || m.cols() != family.dim())
      throw ValidationError("family '" + family.name + "' returns a matrix of the wrong size");
    SymMatrix{m};  // throws when not symmetric
    for (double T : {50.0, 100.0}) {
      const double bound = family.decay_bound(T) + 1e-12;
      if ((family.A(lambda, T) - family.A_plus(lambda)).frobenius() > bound ||
          (family.A(lambda, -T) - family.A_minus(lambda)).frobenius() > bound)
        throw ValidationError("family '" + family.name + "' does not approach its limits at T=" +
                              std::to_string(T));
    }
    if (!check_hyperbolic(family, lambda).ok)
      throw HyperbolicityError("family '" + family.name + "' has a non-hyperbolic limit");
  }
}

}  // namespace hamflow
