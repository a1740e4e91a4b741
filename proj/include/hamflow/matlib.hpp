#pragma once

// Dense small-matrix kernels: symmetric eigendecomposition, signature,
// hyperbolic invariant-subspace projectors and subspace intersection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "hamflow/errors.hpp"
#include "hamflow/matrix.hpp"

namespace hamflow {

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kOrthonormalTol = 1e-10;
inline constexpr double kRankTol = 1e-7;

/// Real symmetric matrix. Construction validates symmetry to an absolute
/// tolerance and then symmetrizes exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m, double tol = kSymmetryTol) : m_(std::move(m)) {
    if (!m_.square()) throw ValidationError("symmetric matrix must be square");
    for (std::size_t i = 0; i < m_.rows(); ++i)
      for (std::size_t j = i + 1; j < m_.cols(); ++j) {
        const double a = m_(i, j), b = m_(j, i);
        if (!(std::abs(a - b) <= tol))
          throw ValidationError("matrix is not symmetric at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
        m_(i, j) = m_(j, i) = 0.5 * (a + b);
      }
  }
  SymMatrix(std::initializer_list<std::initializer_list<double>> init)
      : SymMatrix(Matrix(init)) {}

  std::size_t size() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct Spectrum {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values[i]
};

/// Orthonormal basis of a subspace, stored as columns.
class Frame {
 public:
  Frame() = default;
  explicit Frame(Matrix columns, double tol = kOrthonormalTol) : cols_(std::move(columns)) {
    if (cols_.cols() == 0) return;
    const Matrix g = cols_.transpose() * cols_;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        const double want = i == j ? 1.0 : 0.0;
        if (!(std::abs(g(i, j) - want) <= tol))
          throw ValidationError("frame columns are not orthonormal");
      }
  }
  /// Empty (zero-dimensional) subspace of R^ambient.
  static Frame zero(std::size_t ambient) {
    Frame f;
    f.cols_ = Matrix(ambient, 0);
    return f;
  }

  std::size_t ambient() const noexcept { return cols_.rows(); }
  std::size_t dim() const noexcept { return cols_.cols(); }
  const Matrix& columns() const noexcept { return cols_; }
  Vector col(std::size_t j) const { return cols_.col(j); }

 private:
  Matrix cols_;
};

namespace detail {

// Flip each column so that its first component above `floor` in magnitude
// is positive.
inline void normalize_column_signs(Matrix& v, double floor = 1e-12) {
  for (std::size_t j = 0; j < v.cols(); ++j) {
    for (std::size_t i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > floor) {
        if (v(i, j) < 0.0)
          for (std::size_t r = 0; r < v.rows(); ++r) v(r, j) = -v(r, j);
        break;
      }
    }
  }
}

}  // namespace detail

/// Full spectrum by cyclic Jacobi rotations. Eigenvalues ascending; each
/// eigenvector has its first significant component positive; within a
/// cluster of equal eigenvalues vectors are ordered lexicographically
/// (descending) so the output is deterministic.
inline Spectrum sym_eig(const SymMatrix& sym) {
  const std::size_t n = sym.size();
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);
  const double scale = std::max(a.frobenius(), std::numeric_limits<double>::min());

  constexpr int kMaxSweeps = 100;
  bool converged = n <= 1;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw NumericalError("Jacobi eigenvalue iteration did not converge");

  detail::normalize_column_signs(v);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double cluster = 1e-12 * (1.0 + scale);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double dx = a(x, x), dy = a(y, y);
    if (std::abs(dx - dy) > cluster) return dx < dy;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v(i, x) - v(i, y)) > 1e-12) return v(i, x) > v(i, y);
    }
    return false;
  });

  Spectrum out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

struct Signature {
  std::size_t plus = 0;
  std::size_t zero = 0;
  std::size_t minus = 0;
  int value() const noexcept { return static_cast<int>(plus) - static_cast<int>(minus); }
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline Signature signature(const SymMatrix& q, double tol) {
  if (!(tol > 0.0)) throw ValidationError("signature tolerance must be positive");
  Signature s;
  for (double ev : sym_eig(q).values) {
    if (ev > tol)
      ++s.plus;
    else if (ev < -tol)
      ++s.minus;
    else
      ++s.zero;
  }
  return s;
}

struct QR {
  Matrix q;  // m x d, orthonormal columns
  Matrix r;  // d x d, upper triangular with positive diagonal
};

/// Thin QR by modified Gram-Schmidt with one reorthogonalization pass.
inline QR qr_decompose(const Matrix& a) {
  const std::size_t m = a.rows(), d = a.cols();
  if (d > m) throw ValidationError("QR needs rows >= cols");
  QR out{a, Matrix(d, d)};
  Matrix& q = out.q;
  for (std::size_t j = 0; j < d; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double c = 0.0;
        for (std::size_t i = 0; i < m; ++i) c += q(i, k) * q(i, j);
        out.r(k, j) += c;
        for (std::size_t i = 0; i < m; ++i) q(i, j) -= c * q(i, k);
      }
    }
    double nv = 0.0;
    for (std::size_t i = 0; i < m; ++i) nv += q(i, j) * q(i, j);
    nv = std::sqrt(nv);
    if (!(nv > 1e-300) || !std::isfinite(nv)) throw NumericalError("QR of a rank-deficient frame");
    out.r(j, j) = nv;
    for (std::size_t i = 0; i < m; ++i) q(i, j) /= nv;
  }
  return out;
}

/// Inverse by LU with partial pivoting.
inline Matrix inverse(const Matrix& m) {
  if (!m.square()) throw ValidationError("inverse of a non-square matrix");
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix inv = Matrix::identity(n);
  const double scale = std::max(m.max_abs(), std::numeric_limits<double>::min());
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (!(std::abs(a(piv, c)) > 1e-14 * scale)) throw NumericalError("matrix is numerically singular");
    if (piv != c)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(piv, j), a(c, j));
        std::swap(inv(piv, j), inv(c, j));
      }
    const double d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

/// Eigenvalues of a general real matrix: reduction to Hessenberg form by
/// stabilized elimination, then Francis double-shift QR.
inline std::vector<std::complex<double>> general_eigenvalues(const Matrix& m) {
  if (!m.square()) throw ValidationError("eigenvalues of a non-square matrix");
  const int n = static_cast<int>(m.rows());
  Matrix a = m;
  if (!a.all_finite()) throw NumericalError("non-finite matrix entries");

  for (int k = 1; k < n - 1; ++k) {
    double x = 0.0;
    int piv = k;
    for (int j = k; j < n; ++j)
      if (std::abs(a(j, k - 1)) > std::abs(x)) {
        x = a(j, k - 1);
        piv = j;
      }
    if (piv != k) {
      for (int j = k - 1; j < n; ++j) std::swap(a(piv, j), a(k, j));
      for (int j = 0; j < n; ++j) std::swap(a(j, piv), a(j, k));
    }
    if (x != 0.0) {
      for (int i = k + 1; i < n; ++i) {
        double y = a(i, k - 1);
        if (y == 0.0) continue;
        y /= x;
        a(i, k - 1) = 0.0;
        for (int j = k; j < n; ++j) a(i, j) -= y * a(k, j);
        for (int j = 0; j < n; ++j) a(j, k) += y * a(j, i);
      }
    }
  }
  for (int i = 2; i < n; ++i)
    for (int j = 0; j < i - 1; ++j) a(i, j) = 0.0;

  std::vector<double> wr(n), wi(n);
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  const double eps = std::numeric_limits<double>::epsilon();
  auto sign = [](double x, double y) { return y >= 0.0 ? std::abs(x) : -std::abs(x); };

  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l;
    do {
      for (l = nn; l > 0; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn] = 0.0;
        --nn;
      } else {
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -z;
            wi[nn] = z;
          }
          nn -= 2;
        } else {
          if (its == 60) throw NumericalError("Hessenberg QR did not converge");
          if (its == 10 || its == 20 || its == 40) {
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int mm;
          double p = 0.0, q = 0.0, r = 0.0, z;
          for (mm = nn - 2; mm >= l; --mm) {
            z = a(mm, mm);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a(mm + 1, mm) + a(mm, mm + 1);
            q = a(mm + 1, mm + 1) - z - r - s;
            r = a(mm + 2, mm + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (mm == l) break;
            const double u = std::abs(a(mm, mm - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(mm - 1, mm - 1)) + std::abs(z) +
                                            std::abs(a(mm + 1, mm + 1)));
            if (u <= eps * v) break;
          }
          for (int i = mm; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != mm) a(i + 2, i - 1) = 0.0;
          }
          for (int k = mm; k < nn; ++k) {
            if (k != mm) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == mm) {
                if (l != mm) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l + 1 < nn);
  }

  std::vector<std::complex<double>> out(n);
  for (int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
  std::sort(out.begin(), out.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

/// Smallest |Re(mu)| over the eigenvalues mu of m.
inline double min_real_gap(const Matrix& m) {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& mu : general_eigenvalues(m)) gap = std::min(gap, std::abs(mu.real()));
  return gap;
}

/// Singular values (descending) by one-sided Jacobi. Accurate in the
/// absolute sense even for tiny singular values of small matrices.
inline Vector singular_values(const Matrix& m) {
  Matrix a = m.rows() >= m.cols() ? m : m.transpose();
  const std::size_t rows = a.rows(), cols = a.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p < cols; ++p)
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
      }
    if (!rotated) break;
  }
  Vector sv(cols);
  for (std::size_t j = 0; j < cols; ++j) sv[j] = norm2(a.col(j));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

/// Orthonormal basis of the range of m, assuming it has the given rank:
/// the dominant eigenvectors of m m^T.
inline Frame orthonormal_range(const Matrix& m, std::size_t rank) {
  if (rank > m.rows()) throw ValidationError("rank exceeds ambient dimension");
  if (rank == 0) return Frame::zero(m.rows());
  const Spectrum sp = sym_eig(SymMatrix(m * m.transpose(), 1e-9 * (1.0 + m.max_abs() * m.max_abs())));
  const std::size_t n = m.rows();
  Matrix basis(n, rank);
  for (std::size_t j = 0; j < rank; ++j)
    for (std::size_t i = 0; i < n; ++i) basis(i, j) = sp.vectors(i, n - 1 - j);
  detail::normalize_column_signs(basis);
  return Frame(basis, 1e-9);
}

/// Frame spanning the column space of a full-rank matrix.
inline Frame orthonormalize(const Matrix& m) {
  Matrix q = qr_decompose(m).q;
  return Frame(std::move(q), 1e-9);
}

/// Invariant subspace of m for eigenvalues with negative real part, by the
/// Newton iteration for the matrix sign function.
inline Frame stable_projector(const Matrix& m, double tol) {
  if (!m.square()) throw ValidationError("stable_projector needs a square matrix");
  const double gap = min_real_gap(m);
  if (gap < tol)
    throw HyperbolicityError("eigenvalue within " + std::to_string(tol) +
                             " of the imaginary axis (gap " + std::to_string(gap) + ")");
  const std::size_t n = m.rows();
  Matrix s = m;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Matrix next = 0.5 * (s + inverse(s));
    const double diff = (next - s).frobenius();
    s = std::move(next);
    if (!s.all_finite()) break;
    if (diff <= 1e-12 * (1.0 + s.frobenius())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("matrix sign iteration did not converge");
  const Matrix proj = 0.5 * (Matrix::identity(n) - s);
  const auto rank = static_cast<std::size_t>(std::llround(proj.trace()));
  return orthonormal_range(proj, rank);
}

/// Largest principal angle between two subspaces of equal dimension.
inline double subspace_angle(const Frame& f1, const Frame& f2) {
  if (f1.ambient() != f2.ambient() || f1.dim() != f2.dim())
    throw ValidationError("subspace_angle needs frames of equal shape");
  if (f1.dim() == 0) return 0.0;
  const Matrix& a = f1.columns();
  const Matrix& b = f2.columns();
  const Matrix resid = b - a * (a.transpose() * b);
  return std::asin(std::min(1.0, singular_values(resid).front()));
}

/// Sine of the smallest principal angle between two subspaces.
inline double min_principal_sine(const Frame& f1, const Frame& f2) {
  if (f1.ambient() != f2.ambient()) throw ValidationError("frames in different ambient spaces");
  if (f1.dim() == 0 || f2.dim() == 0) return 1.0;
  // Orient so the projected frame has the smaller dimension.
  const Frame& big = f1.dim() >= f2.dim() ? f1 : f2;
  const Frame& small = f1.dim() >= f2.dim() ? f2 : f1;
  const Matrix& a = big.columns();
  const Matrix& b = small.columns();
  const Matrix resid = b - a * (a.transpose() * b);
  return std::min(1.0, singular_values(resid).back());
}

struct Intersection {
  std::size_t dim = 0;
  Frame basis;
};

/// Numerical intersection: singular values of F1^T F2 within tol of 1.
inline Intersection intersection(const Frame& f1, const Frame& f2, double tol = kRankTol) {
  if (f1.ambient() != f2.ambient()) throw ValidationError("frames in different ambient spaces");
  Intersection out{0, Frame::zero(f1.ambient())};
  if (f1.dim() == 0 || f2.dim() == 0) return out;
  const Matrix c = f1.columns().transpose() * f2.columns();
  const Spectrum sp = sym_eig(SymMatrix(c * c.transpose(), 1e-9));
  std::vector<std::size_t> hits;
  for (std::size_t i = sp.values.size(); i-- > 0;) {
    const double sigma = std::sqrt(std::max(0.0, sp.values[i]));
    if (sigma >= 1.0 - tol) hits.push_back(i);
  }
  out.dim = hits.size();
  if (out.dim == 0) return out;
  Matrix u(f1.dim(), out.dim);
  for (std::size_t j = 0; j < out.dim; ++j)
    for (std::size_t i = 0; i < f1.dim(); ++i) u(i, j) = sp.vectors(i, hits[j]);
  Matrix basis = f1.columns() * u;
  detail::normalize_column_signs(basis);
  out.basis = orthonormalize(basis);
  return out;
}

/// Checks that the real 2m x 2m embedding diag(M, M) of the complexified
/// operator carries every eigenvalue of M with exactly doubled multiplicity.
inline bool complexify_eig_check(const SymMatrix& m) {
  const std::size_t n = m.size();
  Matrix emb(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) emb(i, j) = emb(n + i, n + j) = m(i, j);
  const Vector real = sym_eig(m).values;
  const Vector doubled = sym_eig(SymMatrix(emb)).values;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(doubled[2 * i] - real[i]) > 1e-9 || std::abs(doubled[2 * i + 1] - real[i]) > 1e-9)
      return false;
  }
  return true;
}

/// max |omega(f_i, f_j)| over the columns of a frame; zero for Lagrangian frames.
inline double lagrangian_defect(const Matrix& frame) {
  double worst = 0.0;
  for (std::size_t i = 0; i < frame.cols(); ++i)
    for (std::size_t j = i + 1; j < frame.cols(); ++j)
      worst = std::max(worst, std::abs(symplectic_form(frame.col(i), frame.col(j))));
  return worst;
}

}  // namespace hamflow
