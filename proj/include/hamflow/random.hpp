#pragma once

// Seeded generators of random symmetric matrices and affine paths, shared
// by the property suites and the CLI self-test.

#include <cstdint>
#include <random>

#include "hamflow/matlib.hpp"
#include "hamflow/sflow.hpp"

namespace hamflow {

/// Symmetric matrix with independent N(0, 1) entries on and above the diagonal.
inline SymMatrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = gauss(rng);
  return SymMatrix(m);
}

inline double smallest_abs_eigenvalue(const SymMatrix& m) {
  double g = std::numeric_limits<double>::infinity();
  for (double mu : sym_eig(m).values) g = std::min(g, std::abs(mu));
  return g;
}

/// B + s C on [-1, 1] with both endpoint values at least `margin` away
/// from singular. Redraws until that holds.
inline MatrixPath random_affine_path(std::size_t n, std::mt19937_64& rng, double margin = 1e-2) {
  while (true) {
    const SymMatrix b = random_symmetric(n, rng);
    const SymMatrix c = random_symmetric(n, rng);
    const SymMatrix at_a(b.matrix() - c.matrix());
    const SymMatrix at_b(b.matrix() + c.matrix());
    if (smallest_abs_eigenvalue(at_a) > margin && smallest_abs_eigenvalue(at_b) > margin)
      return MatrixPath::affine(b, c, {-1.0, 1.0});
  }
}

/// Number of negative eigenvalues.
inline std::size_t morse_index(const SymMatrix& m) {
  std::size_t c = 0;
  for (double mu : sym_eig(m).values)
    if (mu < 0.0) ++c;
  return c;
}

}  // namespace hamflow
