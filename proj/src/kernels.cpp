#include "micgan/kernels.hpp"

#include <cstddef>
#include <string>

namespace micgan::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

void check_inner(std::size_t lhs, std::size_t rhs, const char* what) {
  if (lhs != rhs)
    throw ShapeError(std::string(what) + ": inner dimensions " + std::to_string(lhs) +
                     " and " + std::to_string(rhs) + " differ");
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  const bool par = m * n * k >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_a_bt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Matrix c(m, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  const bool par = m * n * k >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      pc[i * n + j] = s;
    }
  }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_at_b");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix c(k, n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  const bool par = m * n * k >= kParallelWork;
  // Parallel over output rows; each c(p, :) accumulates over i in order.
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(k); ++p) {
    double* crow = pc + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = pa[i * k + p];
      const double* brow = pb + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

void add_row_vector(Matrix& m, std::span<const double> bias) {
  if (bias.size() != m.cols())
    throw ShapeError("add_row_vector: bias length " + std::to_string(bias.size()) +
                     " != cols " + std::to_string(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "serial::matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "serial::matmul_a_bt");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "serial::matmul_at_b");
  Matrix c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.cols(); ++p)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, p) * b(i, j);
      c(p, j) = s;
    }
  return c;
}

}  // namespace serial

}  // namespace micgan::kernels
