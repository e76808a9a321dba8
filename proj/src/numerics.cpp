#include "lossav/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "lossav/common.hpp"

namespace lossav::num {

double brent(const std::function<double(double)>& f, double a, double b,
             double xtol, int max_iter) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    throw NumericalError("brent: no sign change on bracket [" +
                         std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * 2.22e-16 * std::abs(b) + 0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  throw NumericalError("brent: no convergence after max iterations");
}

namespace {

struct Gauss15 {
  std::array<double, 15> x{};  // nodes on (-1, 1)
  std::array<double, 15> w{};
  Gauss15() {
    // Nodes/weights computed at startup by Newton iteration on P_15; avoids
    // hard-coded constants.
    const int n = 15;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
  }
};

const Gauss15& gauss15() {
  static const Gauss15 g;
  return g;
}

double gl15(const std::function<double(double)>& f, double a, double b) {
  const auto& g = gauss15();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 15; ++i) sum += g.w[i] * f(mid + half * g.x[i]);
  return sum * half;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol, int max_intervals) {
  if (a == b) return 0.0;
  struct Interval {
    double a, b, coarse, tol;
  };
  std::vector<Interval> stack;
  stack.push_back({a, b, gl15(f, a, b), abs_tol});
  double total = 0.0;
  double err_accum = 0.0;
  int used = 1;
  while (!stack.empty()) {
    const Interval iv = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (iv.a + iv.b);
    const double left = gl15(f, iv.a, mid);
    const double right = gl15(f, mid, iv.b);
    const double fine = left + right;
    const double err = std::abs(fine - iv.coarse);
    const double local_tol =
        std::max(iv.tol, rel_tol * std::abs(fine));
    if (err <= local_tol || (iv.b - iv.a) < 1e-14 * (std::abs(a) + std::abs(b) + 1.0)) {
      total += fine;
      err_accum += err;
      continue;
    }
    if (used + 2 > max_intervals) {
      throw NumericalError("integrate: interval budget exhausted, error ~" +
                           std::to_string(err + err_accum));
    }
    used += 2;
    stack.push_back({iv.a, mid, left, 0.5 * iv.tol});
    stack.push_back({mid, iv.b, right, 0.5 * iv.tol});
  }
  return total;
}

double erfcx(double x) {
  if (x < 0.0) {
    const double x2 = x * x;
    if (x2 > 708.0) {
      throw NumericalError("erfcx: overflow for x = " + std::to_string(x));
    }
    return 2.0 * std::exp(x2) - erfcx(-x);
  }
  if (x < 12.0) {
    // exp(x^2) stays representable and erfc keeps full relative accuracy.
    return std::exp(x * x) * std::erfc(x);
  }
  // Laplace continued fraction, excellent for large x.
  double cf = 0.0;
  for (int k = 20; k >= 1; --k) cf = 0.5 * k / (x + cf);
  return 1.0 / ((x + cf) * std::sqrt(M_PI));
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * M_SQRT1_2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0, 1)");
  }
  const bool lower = p < 0.5;
  const double q = lower ? p : 1.0 - p;
  // A&S 26.2.22 rational start (|error| < 4.5e-4), then Newton on the upper
  // tail via erfc, which converges to ~1e-15 in three steps.
  const double t = std::sqrt(-2.0 * std::log(q));
  double z = t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
  for (int it = 0; it < 4; ++it) {
    const double tail = 0.5 * std::erfc(z * M_SQRT1_2);  // P(Z > z) target q
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    z += (tail - q) / pdf;
  }
  return lower ? -z : z;
}

double gammp(double a, double x) {
  if (x < 0.0 || a <= 0.0) {
    throw std::invalid_argument("gammp: bad arguments");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    // series representation
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // continued fraction for Q(a, x)
  const double fpmin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

double chi2_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return gammp(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0) || dof <= 0.0) {
    throw std::invalid_argument("chi2_quantile: bad arguments");
  }
  // Wilson-Hilferty start
  const double z = normal_quantile(p);
  const double c = 2.0 / (9.0 * dof);
  double x = dof * std::pow(1.0 - c + z * std::sqrt(c), 3);
  if (x <= 0.0) x = 0.5 * dof;
  for (int it = 0; it < 60; ++it) {
    const double fx = chi2_cdf(x, dof) - p;
    const double a = 0.5 * dof;
    const double pdf = std::exp((a - 1.0) * std::log(0.5 * x) - 0.5 * x -
                                std::lgamma(a)) * 0.5;
    if (pdf <= 0.0) break;
    const double step = fx / pdf;
    x -= step;
    if (x <= 0.0) x = 0.25 * (x + step);  // fall back toward the interior
    if (std::abs(step) < 1e-12 * (1.0 + x)) break;
  }
  return x;
}

void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers =
      static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, n)));
  if (workers == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn, &error, &error_mutex] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lossav::num
