#pragma once

#include <cstddef>

#include "esn/matrix.hpp"

namespace esn {

// Entrywise logistic sigmoid, stable for the full finite double range.
Matrix sigmoid_map(const Matrix& m);

// Largest eigenvalue modulus of a square sparse matrix. Power iteration with
// a seeded start vector; falls back to a dense eigen-decomposition when the
// iteration stalls (complex or clustered dominant eigenvalues).
double spectral_radius(const SparseMatrix& m, double tol = 1e-10, std::size_t max_iter = 2000);

// Dense-path spectral radius, exposed for oracles and small fallbacks.
double spectral_radius_dense(const Matrix& m);

// Solves a*x = b for symmetric positive definite a via Cholesky.
// Throws NumericError naming the failing pivot when a is not PD.
Matrix solve_spd(const Matrix& a, const Matrix& b);

}  // namespace esn
