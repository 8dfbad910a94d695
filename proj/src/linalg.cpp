#include "micgan/linalg.hpp"

#include <cmath>
#include <string>

namespace micgan::linalg {

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= l(j, p) * l(j, p);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw NumericError("cholesky: matrix is not positive definite (pivot " + std::to_string(j) +
                         ")");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

std::vector<double> forward_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw ShapeError("forward_solve: dimension mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t p = 0; p < i; ++p) s -= l(i, p) * y[p];
    y[i] = s / l(i, i);
  }
  return y;
}

std::vector<double> backward_solve_transposed(const Matrix& l, std::span<const double> y) {
  const std::size_t n = l.rows();
  if (y.size() != n) throw ShapeError("backward_solve_transposed: dimension mismatch");
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t p = i + 1; p < n; ++p) s -= l(p, i) * x[p];
    x[i] = s / l(i, i);
  }
  return x;
}

double log_det_from_cholesky(const Matrix& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

Matrix symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("symmetrized: matrix is not square");
  Matrix s = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

}  // namespace micgan::linalg
