#pragma once

#include <span>
#include <vector>

#include "micgan/matrix.hpp"

namespace micgan::linalg {

// Lower Cholesky factor of a symmetric positive-definite matrix.
// Throws NumericError when a pivot is not strictly positive.
Matrix cholesky(const Matrix& spd);

// Solves L y = b for lower-triangular L.
std::vector<double> forward_solve(const Matrix& lower, std::span<const double> b);

// Solves L^T x = y for lower-triangular L.
std::vector<double> backward_solve_transposed(const Matrix& lower, std::span<const double> y);

// log det(A) given A = L L^T.
double log_det_from_cholesky(const Matrix& lower);

bool is_symmetric(const Matrix& m, double tol = 0.0);

// (m + m^T) / 2.
Matrix symmetrized(const Matrix& m);

}  // namespace micgan::linalg
