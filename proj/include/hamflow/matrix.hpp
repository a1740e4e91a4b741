#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "hamflow/errors.hpp"

namespace hamflow {

using Vector = std::vector<double>;

namespace detail {

// Contiguous doubles with inline storage for small sizes; the integrators
// create many 2x2 / 4x4 temporaries per step.
class DenseStorage {
 public:
  static constexpr std::size_t kInline = 16;

  DenseStorage() = default;
  DenseStorage(std::size_t n, double fill) : size_(n) {
    if (n > kInline) heap_ = std::make_unique<double[]>(n);
    std::fill_n(data(), n, fill);
  }
  DenseStorage(const DenseStorage& o) : DenseStorage(o.size_, 0.0) {
    std::copy_n(o.data(), size_, data());
  }
  DenseStorage(DenseStorage&& o) noexcept : size_(o.size_), small_(o.small_), heap_(std::move(o.heap_)) {
    o.size_ = 0;
  }
  DenseStorage& operator=(const DenseStorage& o) {
    if (this != &o) {
      if (o.size_ != size_) *this = DenseStorage(o.size_, 0.0);
      std::copy_n(o.data(), size_, data());
    }
    return *this;
  }
  DenseStorage& operator=(DenseStorage&& o) noexcept {
    size_ = o.size_;
    small_ = o.small_;
    heap_ = std::move(o.heap_);
    o.size_ = 0;
    return *this;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  double* data() noexcept { return heap_ ? heap_.get() : small_.data(); }
  const double* data() const noexcept { return heap_ ? heap_.get() : small_.data(); }
  double* begin() noexcept { return data(); }
  double* end() noexcept { return data() + size_; }
  const double* begin() const noexcept { return data(); }
  const double* end() const noexcept { return data() + size_; }
  double& operator[](std::size_t i) noexcept { return data()[i]; }
  double operator[](std::size_t i) const noexcept { return data()[i]; }

  friend bool operator==(const DenseStorage& a, const DenseStorage& b) {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::size_t size_ = 0;
  std::array<double, kInline> small_{};
  std::unique_ptr<double[]> heap_;
};

}  // namespace detail

/// Dense row-major real matrix for the small (<= ~32x32) problems handled
/// by the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_ = detail::DenseStorage(rows_ * cols_, 0.0);
    double* out = data_.data();
    for (const auto& row : init) {
      if (row.size() != cols_) throw ValidationError("ragged matrix initializer");
      out = std::copy(row.begin(), row.end(), out);
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static Matrix column(std::span<const double> v) {
    Matrix m(v.size(), 1);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> raw() noexcept { return {data_.data(), data_.size()}; }
  std::span<const double> raw() const noexcept { return {data_.data(), data_.size()}; }

  Vector col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }
  void set_col(std::size_t j, std::span<const double> v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Columns [first, first+count).
  Matrix cols_range(std::size_t first, std::size_t count) const {
    Matrix m(rows_, count);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < count; ++j) m(i, j) = (*this)(i, first + j);
    return m;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  double frobenius() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }
  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator-(Matrix a) { return a *= -1.0; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw ValidationError("matrix product shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw ValidationError("matrix-vector shape mismatch");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows_; ++i) {
      os << (i ? "\n[" : "[");
      for (std::size_t j = 0; j < m.cols_; ++j) os << (j ? ", " : "") << m(i, j);
      os << "]";
    }
    return os;
  }

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw ValidationError("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  detail::DenseStorage data_;
};

/// out = a * b, reusing out's storage when the shape already fits.
inline void multiply_into(Matrix& out, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("matrix product shape mismatch");
  if (out.rows() != a.rows() || out.cols() != b.cols()) out = Matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Standard symplectic matrix [[0, -I], [I, 0]] on R^{2n}.
inline Matrix symplectic_j(std::size_t n) {
  Matrix j(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    j(i, n + i) = -1.0;
    j(n + i, i) = 1.0;
  }
  return j;
}

/// J * a for the standard symplectic J, without forming J.
inline Matrix apply_j(const Matrix& a) {
  const std::size_t n = a.rows() / 2;
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(i, j) = -a(n + i, j);
      out(n + i, j) = a(i, j);
    }
  return out;
}

/// omega(u, v) = <J u, v>.
inline double symplectic_form(std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size() / 2;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // (J u)_i = -u_{n+i}, (J u)_{n+i} = u_i
    s += -u[n + i] * v[i] + u[i] * v[n + i];
  }
  return s;
}

}  // namespace hamflow
