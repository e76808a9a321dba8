#pragma once

#include <cstddef>
#include <vector>

namespace lossav::la {

// Minimal row-major dense matrix. Only what the estimation statistics need.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

Mat matmul(const Mat& x, const Mat& y);
Mat transpose(const Mat& x);

// Solve A x = b for symmetric positive definite A (Cholesky). Throws
// NumericalError if A is not positive definite.
std::vector<double> solve_spd(Mat a, std::vector<double> b);

// Inverse of a symmetric positive definite matrix.
Mat inverse_spd(const Mat& a);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues; on exit `vectors` holds eigenvectors in columns.
std::vector<double> jacobi_eigensym(Mat a, Mat& vectors, int max_sweeps = 64);

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix; eigenvalues below
// rel_tol * max_eig are treated as zero.
Mat pinv_sym(const Mat& a, double rel_tol = 1e-11);

}  // namespace lossav::la
