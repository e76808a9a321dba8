#include "lossav/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "lossav/common.hpp"

namespace lossav::la {

Mat matmul(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: shape mismatch");
  Mat out(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += v * y(k, j);
    }
  }
  return out;
}

Mat transpose(const Mat& x) {
  Mat out(x.cols, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
  return out;
}

namespace {

// In-place Cholesky factor (lower). Throws on non-PD input.
void cholesky(Mat& a) {
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (d <= 0.0) throw NumericalError("cholesky: matrix not positive definite");
    const double lj = std::sqrt(d);
    a(j, j) = lj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / lj;
    }
  }
}

}  // namespace

std::vector<double> solve_spd(Mat a, std::vector<double> b) {
  if (a.rows != a.cols || b.size() != a.rows)
    throw std::invalid_argument("solve_spd: shape mismatch");
  cholesky(a);
  const std::size_t n = a.rows;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * b[k];
    b[ii] = s / a(ii, ii);
  }
  return b;
}

Mat inverse_spd(const Mat& a) {
  const std::size_t n = a.rows;
  Mat out(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    const auto col = solve_spd(a, std::move(e));
    for (std::size_t i = 0; i < n; ++i) out(i, j) = col[i];
  }
  return out;
}

std::vector<double> jacobi_eigensym(Mat a, Mat& vectors, int max_sweeps) {
  const std::size_t n = a.rows;
  vectors = Mat(n, n);
  for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += a(i, j) * a(i, j);
  const double off_tol = 1e-28 * std::max(total, 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < off_tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
        const double t =
            (theta >= 0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
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
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  return eig;
}

Mat pinv_sym(const Mat& a, double rel_tol) {
  Mat v;
  const auto eig = jacobi_eigensym(a, v);
  double max_eig = 0.0;
  for (double e : eig) max_eig = std::max(max_eig, std::abs(e));
  const double cutoff = max_eig * rel_tol;
  const std::size_t n = a.rows;
  Mat out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(eig[k]) <= cutoff) continue;
    const double inv = 1.0 / eig[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = v(i, k);
      if (vik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += inv * vik * v(j, k);
    }
  }
  return out;
}

}  // namespace lossav::la
