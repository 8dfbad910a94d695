#pragma once

#include <span>
#include <vector>

#include "micgan/matrix.hpp"

// Data-parallel inner loops. Every output element is reduced in a fixed
// order by exactly one thread, so results do not depend on the OpenMP
// schedule or thread count. The `serial` namespace holds the plain-loop
// reference versions used by tests and the benchmark.
namespace micgan::kernels {

// C = A * B.  A: m x k, B: k x n.
Matrix matmul(const Matrix& a, const Matrix& b);

// C = A * B^T.  A: m x k, B: n x k.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

// C = A^T * B.  A: m x k, B: m x n.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

// Adds `bias` to every row of `m`.
void add_row_vector(Matrix& m, std::span<const double> bias);

// Column sums of `m` (summed over rows, in row order).
std::vector<double> column_sums(const Matrix& m);

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
}  // namespace serial

}  // namespace micgan::kernels
