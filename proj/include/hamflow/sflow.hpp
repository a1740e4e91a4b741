#pragma once

// Spectral flow of paths of selfadjoint operators: an eigenvalue-counting
// engine for matrix paths and a crossing-form engine that also handles
// homoclinic families along parameter paths.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "hamflow/boundary.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/matlib.hpp"
#include "hamflow/systems.hpp"

namespace hamflow {

inline constexpr double kFormTol = 1e-8;
inline constexpr double kDerivativeStep = 1e-5;

struct Domain {
  double a = 0.0;
  double b = 1.0;
  double length() const noexcept { return b - a; }
};

/// What a path reports at a (near-)degenerate instant.
struct CrossingData {
  Matrix kernel;  // orthonormal columns; initial values at t = 0 for homoclinic paths
  SymMatrix form;
  std::vector<SampledSolution> trajectories;  // homoclinic paths only
};

template <class P>
concept SelfadjointPath = requires(const P& p, double s) {
  { p.domain() } -> std::convertible_to<Domain>;
  { p.gap(s) } -> std::convertible_to<double>;
  { p.crossing_data(s) } -> std::same_as<CrossingData>;
};

// ---------------------------------------------------------------------------
// Matrix paths
// ---------------------------------------------------------------------------

/// Path s -> L(s) of symmetric m x m matrices on [a, b].
class MatrixPath {
 public:
  using Eval = std::function<Matrix(double)>;

  MatrixPath(Domain dom, Eval value, Eval derivative = {}, double kernel_tol = 1e-5)
      : dom_(dom), value_(std::move(value)), derivative_(std::move(derivative)), kernel_tol_(kernel_tol) {
    if (!(dom_.b > dom_.a)) throw ValidationError("path domain must satisfy a < b");
    if (!value_) throw ValidationError("path needs a value evaluator");
    size_ = value_(dom_.a).rows();
  }

  /// B + s C on [a, b].
  static MatrixPath affine(const SymMatrix& b0, const SymMatrix& c, Domain dom) {
    if (b0.size() != c.size()) throw ValidationError("affine path matrices differ in size");
    const Matrix bm = b0.matrix(), cm = c.matrix();
    return MatrixPath(dom, [bm, cm](double s) { return bm + cm * s; },
                      [cm](double) { return cm; });
  }

  Domain domain() const noexcept { return dom_; }
  std::size_t size() const noexcept { return size_; }
  double kernel_tol() const noexcept { return kernel_tol_; }
  bool analytic_derivative() const noexcept { return static_cast<bool>(derivative_); }

  SymMatrix value(double s) const { return SymMatrix(value_(s), 1e-10); }

  Matrix derivative(double s) const {
    if (derivative_) return derivative_(s);
    const double h = kDerivativeStep;
    return (value_(s + h) - value_(s - h)) * (0.5 / h);
  }

  /// Smallest |eigenvalue|.
  double gap(double s) const {
    double g = std::numeric_limits<double>::infinity();
    for (double mu : sym_eig(value(s)).values) g = std::min(g, std::abs(mu));
    return g;
  }

  CrossingData crossing_data(double s) const {
    const Spectrum sp = sym_eig(value(s));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sp.values.size(); ++i)
      if (std::abs(sp.values[i]) <= kernel_tol_) idx.push_back(i);
    Matrix k(size_, idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
      for (std::size_t i = 0; i < size_; ++i) k(i, j) = sp.vectors(i, idx[j]);
    const Matrix form = k.transpose() * derivative(s) * k;
    return {std::move(k), SymMatrix(0.5 * (form + form.transpose()), 1e-9), {}};
  }

  /// Same image traversed backwards on the same domain.
  MatrixPath reversed() const {
    const double a = dom_.a, b = dom_.b;
    Eval v = [f = value_, a, b](double s) { return f(a + b - s); };
    Eval d;
    if (derivative_) d = [f = derivative_, a, b](double s) { return -f(a + b - s); };
    return MatrixPath(dom_, std::move(v), std::move(d), kernel_tol_);
  }

  /// This path followed by `next`, which must start where this one ends.
  MatrixPath concat(const MatrixPath& next) const {
    if (std::abs(next.dom_.a - dom_.b) > 1e-12)
      throw ValidationError("concatenated paths must share the junction parameter");
    if ((value_(dom_.b) - next.value_(next.dom_.a)).max_abs() > 1e-10)
      throw ValidationError("concatenated paths disagree at the junction");
    const double mid = dom_.b;
    Eval v = [f = value_, g = next.value_, mid](double s) { return s <= mid ? f(s) : g(s); };
    Eval d = [p = *this, q = next, mid](double s) {
      return s <= mid ? p.derivative(s) : q.derivative(s);
    };
    return MatrixPath({dom_.a, next.dom_.b}, std::move(v), std::move(d), kernel_tol_);
  }

  /// Real embedding diag(L, L) of the complexified path.
  MatrixPath doubled() const {
    auto dbl = [](const Matrix& m) {
      const std::size_t n = m.rows();
      Matrix e(2 * n, 2 * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) e(i, j) = e(n + i, n + j) = m(i, j);
      return e;
    };
    Eval v = [f = value_, dbl](double s) { return dbl(f(s)); };
    Eval d = [p = *this, dbl](double s) { return dbl(p.derivative(s)); };
    return MatrixPath(dom_, std::move(v), std::move(d), kernel_tol_);
  }

 private:
  Domain dom_;
  Eval value_;
  Eval derivative_;
  double kernel_tol_;
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Homoclinic paths
// ---------------------------------------------------------------------------

/// The operators L_lambda(s) of a Hamiltonian family along a curve
/// s -> lambda(s) in T^k. Degeneracy is measured by the smallest principal
/// angle between E^s and E^u at t = 0.
class HomoclinicPath {
 public:
  using Curve = std::function<std::vector<double>(double)>;

  HomoclinicPath(HamiltonianFamily family, Domain dom, Curve angles, Curve velocity,
                 BoundaryOptions opts = {})
      : family_(std::make_shared<const HamiltonianFamily>(std::move(family))),
        dom_(dom),
        angles_(std::move(angles)),
        velocity_(std::move(velocity)),
        opts_(std::move(opts)) {
    if (!(dom_.b > dom_.a)) throw ValidationError("path domain must satisfy a < b");
    if (!family_->dA) throw ValidationError("crossing forms need a parameter derivative dA");
  }

  /// Piecewise-linear curve through the waypoints, each leg along the
  /// shortest arc per angle (an exact half turn goes in the + direction).
  /// Parametrized by Euclidean arc length in angle space starting at `origin`.
  static HomoclinicPath through(HamiltonianFamily family, const std::vector<TorusPoint>& waypoints,
                                BoundaryOptions opts = {}, double origin = 0.0) {
    if (waypoints.size() < 2) throw ValidationError("a path needs at least two waypoints");
    const std::size_t k = family.k;
    std::vector<std::vector<double>> legs;
    std::vector<double> lengths;
    for (std::size_t w = 0; w + 1 < waypoints.size(); ++w) {
      if (waypoints[w].dim() != k || waypoints[w + 1].dim() != k)
        throw ValidationError("waypoint dimension differs from the family");
      std::vector<double> d(k);
      double len = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        d[j] = TorusPoint::arc(waypoints[w][j], waypoints[w + 1][j]);
        len += d[j] * d[j];
      }
      len = std::sqrt(len);
      if (len == 0.0) continue;
      legs.push_back(std::move(d));
      lengths.push_back(len);
    }
    if (legs.empty()) throw ValidationError("path has zero length");
    std::vector<double> start(waypoints.front().angles().begin(), waypoints.front().angles().end());
    return from_legs(std::move(family), std::move(start), std::move(legs), std::move(lengths),
                     std::move(opts), origin);
  }

  /// Loop along coordinate j: Theta_j runs from base_j - pi + shift through a
  /// full turn, the other angles fixed at the base point. The parameter
  /// equals the unwrapped Theta_j.
  static HomoclinicPath coordinate_loop(HamiltonianFamily family, std::size_t j,
                                        const TorusPoint& base, BoundaryOptions opts = {},
                                        double shift = 0.0) {
    if (j >= family.k) throw ValidationError("coordinate index out of range");
    if (base.dim() != family.k) throw ValidationError("base point dimension differs from the family");
    std::vector<double> start(base.angles().begin(), base.angles().end());
    const double s0 = -std::numbers::pi + shift;
    start[j] = s0;
    std::vector<double> leg(family.k, 0.0);
    leg[j] = 2.0 * std::numbers::pi;
    return from_legs(std::move(family), std::move(start), {leg}, {2.0 * std::numbers::pi},
                     std::move(opts), s0);
  }

  Domain domain() const noexcept { return dom_; }
  const HamiltonianFamily& family() const noexcept { return *family_; }
  const BoundaryOptions& options() const noexcept { return opts_; }
  TorusPoint point(double s) const { return TorusPoint(angles_(s)); }
  std::vector<double> velocity(double s) const { return velocity_(s); }

  BoundaryData boundary(double s) const { return boundary_data(*family_, point(s), opts_); }
  double gap(double s) const { return degeneracy_gap(boundary(s)); }

  CrossingData crossing_data(double s) const {
    const BoundaryData bd = boundary(s);
    KernelBasis kb = kernel_solutions(*family_, bd, opts_);
    const std::vector<double> dir = velocity_(s);
    const std::size_t d = kb.dim;
    Matrix form(d, d);
    if (d > 0) {
      const auto& times = kb.trajectories.front().times;
      const double h = times[1] - times[0];
      const Vector w = simpson_weights(times.size(), h);
      for (std::size_t i = 0; i < times.size(); ++i) {
        const Matrix da = family_->dA(bd.lambda, dir, times[i]);
        for (std::size_t p = 0; p < d; ++p) {
          const Vector au = da * kb.trajectories[p].values[i];
          for (std::size_t q = p; q < d; ++q) form(p, q) += w[i] * dot(au, kb.trajectories[q].values[i]);
        }
      }
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < p; ++q) form(p, q) = form(q, p);
    }
    return {kb.directions.columns(), SymMatrix(form), std::move(kb.trajectories)};
  }

  /// Same image traversed backwards on the same domain.
  HomoclinicPath reversed() const {
    const double a = dom_.a, b = dom_.b;
    Curve ang = [f = angles_, a, b](double s) { return f(a + b - s); };
    Curve vel = [f = velocity_, a, b](double s) {
      auto v = f(a + b - s);
      for (double& x : v) x = -x;
      return v;
    };
    HomoclinicPath out = *this;
    out.angles_ = std::move(ang);
    out.velocity_ = std::move(vel);
    return out;
  }

  /// Precomposition with a monotone increasing map phi of the domain onto itself.
  HomoclinicPath reparametrized(std::function<double(double)> phi,
                                std::function<double(double)> dphi) const {
    HomoclinicPath out = *this;
    out.angles_ = [f = angles_, phi](double s) { return f(phi(s)); };
    out.velocity_ = [f = velocity_, phi, dphi](double s) {
      auto v = f(phi(s));
      const double r = dphi(s);
      for (double& x : v) x *= r;
      return v;
    };
    return out;
  }

 private:
  static HomoclinicPath from_legs(HamiltonianFamily family, std::vector<double> start,
                                  std::vector<std::vector<double>> legs, std::vector<double> lengths,
                                  BoundaryOptions opts, double origin) {
    std::vector<double> knots{origin};
    for (double len : lengths) knots.push_back(knots.back() + len);
    auto locate = [knots](double s) {
      std::size_t i = 0;
      while (i + 2 < knots.size() && s > knots[i + 1]) ++i;
      return i;
    };
    Curve angles = [=](double s) {
      std::vector<double> a = start;
      const std::size_t leg = locate(s);
      for (std::size_t i = 0; i < leg; ++i)
        for (std::size_t j = 0; j < a.size(); ++j) a[j] += legs[i][j];
      const double frac = (s - knots[leg]) / lengths[leg];
      for (std::size_t j = 0; j < a.size(); ++j) a[j] += frac * legs[leg][j];
      return a;
    };
    Curve velocity = [=](double s) {
      const std::size_t leg = locate(s);
      std::vector<double> v = legs[leg];
      for (double& x : v) x /= lengths[leg];
      return v;
    };
    return HomoclinicPath(std::move(family), {origin, knots.back()}, std::move(angles),
                          std::move(velocity), std::move(opts));
  }

  std::shared_ptr<const HamiltonianFamily> family_;
  Domain dom_;
  Curve angles_;
  Curve velocity_;
  BoundaryOptions opts_;
};

// ---------------------------------------------------------------------------
// Crossings
// ---------------------------------------------------------------------------

struct Crossing {
  double lambda0 = 0.0;
  std::size_t kernel_dim = 0;
  Matrix kernel;
  SymMatrix form;
  Signature signature;
  bool regular = false;
  std::vector<SampledSolution> trajectories;
};

struct CrossingSearch {
  std::size_t grid = 64;
  double tol = 1e-6;     // a localized minimum is a crossing when gap <= tol
  double width = 1e-8;   // golden-section bracket width
  double endpoint_tol = 1e-6;
  double resolve = 1e-5;  // candidate runs are refined down to this width
};

namespace detail {

template <class F>
double golden_min(F&& f, double lo, double hi, double width) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > width) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

// Brackets [s_{i-1}, s_{i+1}] around sampled local minima below the
// threshold 2 L ds + tol, L the largest sampled slope. A minimum must beat
// its left neighbour strictly so that plateaus bracket once.
// Largest sampled slope of the gap.
inline double max_slope(const Vector& s, const Vector& g) {
  double slope = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    slope = std::max(slope, std::abs(g[i + 1] - g[i]) / (s[i + 1] - s[i]));
  return slope;
}

// Maximal runs of sample intervals that could hold a zero of a gap function
// with Lipschitz constant lip: g_i + g_{i+1} <= lip * ds.
// A zero between two rising samples is caught this way, where a search for
// local minima of the samples would miss it.
inline std::vector<std::pair<double, double>> candidate_runs(const Vector& s, const Vector& g, double lip) {
  std::vector<std::pair<double, double>> out;
  bool open = false;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const bool hit = g[i] + g[i + 1] <= lip * (s[i + 1] - s[i]);
    if (hit && open) {
      out.back().second = s[i + 1];
    } else if (hit) {
      out.emplace_back(s[i], s[i + 1]);
    }
    open = hit;
  }
  return out;
}

// Sampled slopes underestimate the true Lipschitz constant; this is the margin.
inline constexpr double kLipschitzSafety = 4.0;

// Each level samples its run 8 times finer than the parent level did, so a
// run shrinks once the spacing drops below gap / lip.
template <SelfadjointPath P>
void localize(const P& path, double lo, double hi, double ds, double lip, const CrossingSearch& cs, int depth,
              std::vector<double>& found) {
  if (hi - lo > cs.resolve && depth < 24) {
    ds /= 8.0;
    const std::size_t n = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil((hi - lo) / ds)) + 1, 9, 4096);
    Vector s(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      g[i] = path.gap(s[i]);
    }
    lip = std::max(lip, kLipschitzSafety * max_slope(s, g));
    ds = (hi - lo) / static_cast<double>(n - 1);
    for (const auto& [a, b] : candidate_runs(s, g, lip)) localize(path, a, b, ds, lip, cs, depth + 1, found);
    return;
  }
  // Refinement stops at cs.resolve, above the level where gap noise could
  // split one crossing into several.
  const double x = golden_min([&](double t) { return path.gap(t); }, lo, hi, cs.width);
  if (path.gap(x) <= cs.tol) found.push_back(x);
}

}  // namespace detail

/// Instants in the open domain where the gap function has a localized
/// minimum with gap <= tol, in increasing order.
template <SelfadjointPath P>
std::vector<double> find_crossings(const P& path, const CrossingSearch& cs = {}) {
  if (cs.grid < 3) throw ValidationError("crossing search needs a grid of at least 3 points");
  const Domain dom = path.domain();
  Vector s(cs.grid), g(cs.grid);
  for (std::size_t i = 0; i < cs.grid; ++i) {
    s[i] = dom.a + dom.length() * static_cast<double>(i) / static_cast<double>(cs.grid - 1);
    g[i] = path.gap(s[i]);
  }
  if (g.front() <= cs.endpoint_tol || g.back() <= cs.endpoint_tol)
    throw EndpointSingularError("path endpoint is degenerate (gap " +
                                std::to_string(std::min(g.front(), g.back())) + ")");
  std::vector<double> found;
  const double lip = detail::kLipschitzSafety * detail::max_slope(s, g);
  for (const auto& [a, b] : detail::candidate_runs(s, g, lip))
    detail::localize(path, a, b, s[1] - s[0], lip, cs, 0, found);
  std::sort(found.begin(), found.end());
  for (std::size_t i = 0; i + 1 < found.size(); ++i)
    if (found[i + 1] - found[i] < 10.0 * cs.width)
      throw ClusteredCrossingError("crossings at " + std::to_string(found[i]) + " and " +
                                   std::to_string(found[i + 1]) + " are not separated; refine the grid");
  return found;
}

/// Kernel, crossing form and its signature at lambda0.
template <SelfadjointPath P>
Crossing crossing_form(const P& path, double lambda0) {
  CrossingData data = path.crossing_data(lambda0);
  Crossing c;
  c.lambda0 = lambda0;
  c.kernel_dim = data.kernel.cols();
  if (c.kernel_dim == 0)
    throw ValidationError("no kernel at " + std::to_string(lambda0) + "; not a crossing");
  c.signature = signature(data.form, kFormTol);
  c.regular = c.signature.zero == 0;
  c.kernel = std::move(data.kernel);
  c.form = std::move(data.form);
  c.trajectories = std::move(data.trajectories);
  if (!c.regular)
    throw DegenerateCrossingError("crossing at " + std::to_string(lambda0) +
                                  " has a degenerate crossing form");
  return c;
}

enum class SflMethod { EigCount, CrossingForm };

inline const char* to_string(SflMethod m) {
  return m == SflMethod::EigCount ? "eig-count" : "crossing-form";
}

struct SflDiagnostics {
  std::size_t grid = 0;          // crossing search grid, or final partition size
  std::size_t refinements = 0;   // bisections performed by eig-count
  double tol = 0.0;
  double width = 0.0;
  std::vector<double> windows;   // eig-count Lambda_i per segment
};

struct SflResult {
  int value = 0;
  std::vector<Crossing> crossings;
  SflMethod method = SflMethod::CrossingForm;
  SflDiagnostics diagnostics;
};

/// Sum of crossing-form signatures; every crossing must be regular.
/// Forms at distinct crossings are evaluated concurrently.
template <SelfadjointPath P>
SflResult sfl_crossing(const P& path, const CrossingSearch& cs = {}) {
  const std::vector<double> instants = find_crossings(path, cs);
  std::vector<std::future<Crossing>> jobs;
  jobs.reserve(instants.size());
  for (double s : instants)
    jobs.push_back(std::async(instants.size() > 1 ? std::launch::async : std::launch::deferred,
                              [&path, s] { return crossing_form(path, s); }));
  SflResult out;
  out.method = SflMethod::CrossingForm;
  out.diagnostics.grid = cs.grid;
  out.diagnostics.tol = cs.tol;
  out.diagnostics.width = cs.width;
  // get() in order rethrows the first failing crossing by position.
  std::vector<Crossing> done;
  std::exception_ptr first;
  for (auto& j : jobs) {
    try {
      done.push_back(j.get());
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
  for (auto& c : done) {
    out.value += c.signature.value();
    out.crossings.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue counting
// ---------------------------------------------------------------------------

struct EigCountOptions {
  std::size_t initial_segments = 8;
  std::size_t samples = 17;                 // interior samples per segment
  std::size_t max_segments = std::size_t{1} << 20;
  double endpoint_tol = 1e-8;
  /// Windows above this are not admissible; refinement then separates the spectrum.
  double window_cap = std::numeric_limits<double>::infinity();
};

namespace detail {

struct EigWindow {
  bool ok = false;
  double lambda = 0.0;
};

// Smallest Lambda among the midpoints between consecutive sampled |mu| (and
// one above them all) for which the counts of eigenvalues above Lambda and
// below -Lambda agree at every sample of the segment.
inline EigWindow segment_window(const std::vector<Vector>& spectra, double cap) {
  std::vector<double> mags{0.0};
  for (const auto& sp : spectra)
    for (double mu : sp) mags.push_back(std::abs(mu));
  std::sort(mags.begin(), mags.end());
  mags.push_back(mags.back() + 2.0);
  // Any Lambda strictly inside a gap works equally well, so a midpoint above
  // the cap is pulled down to halfway between the gap's floor and the cap.
  std::vector<double> candidates;
  for (std::size_t i = 0; i + 1 < mags.size(); ++i) {
    const double lo = mags[i], hi = mags[i + 1];
    if (lo >= cap) break;
    if (hi - lo > 1e-12 * (1.0 + hi)) candidates.push_back(std::min(0.5 * (lo + hi), 0.5 * (lo + cap)));
  }
  for (double lam : candidates) {
    if (lam <= 0.0) continue;
    auto count = [lam](const Vector& sp) {
      std::size_t above = 0, below = 0;
      for (double mu : sp) {
        if (mu > lam) ++above;
        if (mu < -lam) ++below;
      }
      return std::pair{above, below};
    };
    const auto ref = count(spectra.front());
    bool ok = true;
    for (const auto& sp : spectra)
      if (count(sp) != ref) {
        ok = false;
        break;
      }
    if (ok) return {true, lam};
  }
  return {};
}

inline std::size_t count_window(const Vector& spectrum, double lam) {
  std::size_t c = 0;
  for (double mu : spectrum)
    if (mu >= 0.0 && mu <= lam) ++c;
  return c;
}

}  // namespace detail

/// Telescoping window count over an admissible partition.
inline SflResult sfl_eigcount(const MatrixPath& path, const EigCountOptions& opts = {}) {
  const Domain dom = path.domain();
  if (path.gap(dom.a) <= opts.endpoint_tol || path.gap(dom.b) <= opts.endpoint_tol)
    throw EndpointSingularError("path endpoint is singular");
  auto spectrum = [&](double s) { return sym_eig(path.value(s)).values; };

  struct Segment {
    double t0, t1;
  };
  std::vector<Segment> pending;
  const std::size_t n0 = std::max<std::size_t>(1, opts.initial_segments);
  for (std::size_t i = n0; i-- > 0;) {
    const double t0 = dom.a + dom.length() * static_cast<double>(i) / static_cast<double>(n0);
    const double t1 = i + 1 == n0 ? dom.b : dom.a + dom.length() * static_cast<double>(i + 1) / static_cast<double>(n0);
    pending.push_back({t0, t1});
  }
  SflResult out;
  out.method = SflMethod::EigCount;
  std::size_t segments = n0;
  long total = 0;
  // Segments are processed left to right (stack holds the leftmost on top).
  while (!pending.empty()) {
    const Segment seg = pending.back();
    pending.pop_back();
    std::vector<Vector> spectra;
    const std::size_t m = opts.samples + 2;
    for (std::size_t i = 0; i < m; ++i)
      spectra.push_back(spectrum(seg.t0 + (seg.t1 - seg.t0) * static_cast<double>(i) / static_cast<double>(m - 1)));
    const detail::EigWindow w = detail::segment_window(spectra, opts.window_cap);
    if (!w.ok) {
      if (++segments > opts.max_segments)
        throw PartitionError("eigenvalue-count partition exceeds " + std::to_string(opts.max_segments) +
                             " segments");
      ++out.diagnostics.refinements;
      const double mid = 0.5 * (seg.t0 + seg.t1);
      pending.push_back({mid, seg.t1});
      pending.push_back({seg.t0, mid});
      continue;
    }
    total += static_cast<long>(detail::count_window(spectra.back(), w.lambda)) -
             static_cast<long>(detail::count_window(spectra.front(), w.lambda));
    out.diagnostics.windows.push_back(w.lambda);
  }
  out.value = static_cast<int>(total);
  out.diagnostics.grid = segments;
  out.diagnostics.tol = opts.endpoint_tol;
  return out;
}

/// Additivity under concatenation and sign change under reversal, both
/// measured with the eigenvalue-count engine.
inline bool concat_reverse_check(const MatrixPath& first, const MatrixPath& second,
                                 const EigCountOptions& opts = {}) {
  if (first.gap(first.domain().b) <= opts.endpoint_tol)
    throw ValidationError("junction value is not invertible");
  const int s1 = sfl_eigcount(first, opts).value;
  const int s2 = sfl_eigcount(second, opts).value;
  const int joined = sfl_eigcount(first.concat(second), opts).value;
  const int back = sfl_eigcount(first.reversed(), opts).value;
  return joined == s1 + s2 && back == -s1;
}

}  // namespace hamflow
