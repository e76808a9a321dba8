#include "lossav/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lossav/common.hpp"
#include "lossav/numerics.hpp"
#include "lossav/resample.hpp"
#include "lossav/rng.hpp"

namespace lossav {

std::int64_t draw_binomial(RngStream& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - draw_binomial(rng, n, 1.0 - p);
  const double np = static_cast<double>(n) * p;
  const double q = 1.0 - p;
  if (np < 10.0) {
    // straight inversion; q^n >= exp(-10)/q so no underflow here
    const double s = p / q;
    const double a = static_cast<double>(n + 1) * s;
    double f = std::pow(q, static_cast<double>(n));
    double u = rng.next_double();
    std::int64_t x = 0;
    while (u > f) {
      u -= f;
      ++x;
      f *= (a / static_cast<double>(x) - s);
      if (x > n) {
        x = 0;
        f = std::pow(q, static_cast<double>(n));
        u = rng.next_double();
      }
    }
    return x;
  }
  // BTRS transformed rejection
  const double spq = std::sqrt(np * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = np + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const std::int64_t m = static_cast<std::int64_t>(std::floor((n + 1) * p));
  const double h = std::lgamma(static_cast<double>(m) + 1.0) +
                   std::lgamma(static_cast<double>(n - m) + 1.0);
  for (;;) {
    const double u = rng.next_double() - 0.5;
    double v = rng.next_double();
    const double us = 0.5 - std::abs(u);
    const std::int64_t k =
        static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + c));
    if (us >= 0.07 && v <= v_r) {
      if (k >= 0 && k <= n) return k;
      continue;
    }
    if (k < 0 || k > n) continue;
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(static_cast<double>(k) + 1.0) -
                 std::lgamma(static_cast<double>(n - k) + 1.0) +
                 static_cast<double>(k - m) * lpq) {
      return k;
    }
  }
}

std::vector<double> resample_props(RngStream& rng,
                                   const std::vector<double>& props,
                                   std::int64_t n) {
  std::vector<double> out(props.size(), 0.0);
  double remaining_p = 1.0;
  std::int64_t remaining_n = n;
  for (std::size_t i = 0; i < props.size() && remaining_n > 0; ++i) {
    if (remaining_p <= 0.0) break;
    const double cond = std::clamp(props[i] / remaining_p, 0.0, 1.0);
    const std::int64_t c = draw_binomial(rng, remaining_n, cond);
    out[i] = static_cast<double>(c) / static_cast<double>(n);
    remaining_n -= c;
    remaining_p -= props[i];
  }
  return out;
}

}  // namespace lossav

namespace lossav::anomaly {

KernelSpec::KernelSpec(int degree_, double bandwidth_) {
  degree = degree_;
  bandwidth = bandwidth_;
  rule_of_thumb = false;
  if (degree != 1 && degree != 2) {
    throw std::invalid_argument("KernelSpec: degree must be 1 or 2");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("KernelSpec: bandwidth must be > 0");
  }
}

KernelSpec KernelSpec::rot(int degree_) {
  if (degree_ != 1 && degree_ != 2) {
    throw std::invalid_argument("KernelSpec: degree must be 1 or 2");
  }
  KernelSpec spec;
  spec.degree = degree_;
  spec.bandwidth = 0.0;
  spec.rule_of_thumb = true;
  return spec;
}

AnomalyStats finalize_stats(double p0, double a0, double a2, double b0,
                            double b2) {
  AnomalyStats s;
  s.p0 = p0;
  s.a0 = a0;
  s.a2 = a2;
  s.b0 = b0;
  s.b2 = b2;
  s.bunching_pp = p0 - a0;
  s.bunching_ratio = (p0 - a0) / a0;
  s.discontinuity_pp = a0 - b0;
  s.discontinuity_pct = (a0 - b0) / b0;
  s.curvature_break_pp = (b0 - b2) - (a2 - a0);
  s.curvature_ratio = (b0 - b2) / (a2 - a0);
  return s;
}

namespace {

constexpr double kEpanechnikov = 0.75;

struct SideSample {
  std::vector<double> x;
  std::vector<double> y;
};

SideSample side_sample(const BinnedDistribution& dist, GrowthSide side) {
  SideSample s;
  const auto centers = dist.grid.centers();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double c = centers[i];
    if (c == 0.0) continue;  // zero bin is the evaluation boundary, not data
    if ((side == GrowthSide::cuts) == (c < 0.0)) {
      s.x.push_back(c);
      s.y.push_back(dist.props[i]);
    }
  }
  return s;
}

// Weighted least squares of y on powers of (x - x0), Epanechnikov weights
// within the bandwidth; returns the intercept (fitted value at x0).
double local_fit(const SideSample& s, int degree, double h, double x0,
                 int leave_out = -1) {
  const int p = degree + 1;
  double xtx[3][3] = {};
  double xty[3] = {};
  int in_window = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (static_cast<int>(i) == leave_out) continue;
    const double u = (s.x[i] - x0) / h;
    if (std::abs(u) >= 1.0) continue;
    const double w = kEpanechnikov * (1.0 - u * u);
    ++in_window;
    const double dx = s.x[i] - x0;
    const double basis[3] = {1.0, dx, dx * dx};
    for (int a = 0; a < p; ++a) {
      for (int b = a; b < p; ++b) xtx[a][b] += w * basis[a] * basis[b];
      xty[a] += w * basis[a] * s.y[i];
    }
  }
  if (in_window < p) {
    throw NumericalError("kernel_density: only " + std::to_string(in_window) +
                         " in-bandwidth bins at evaluation point " +
                         std::to_string(x0) + " (need " + std::to_string(p) +
                         ")");
  }
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < a; ++b) xtx[a][b] = xtx[b][a];
  double l[3][3] = {};
  for (int j = 0; j < p; ++j) {
    double d = xtx[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (d <= 0.0) {
      throw NumericalError("kernel_density: singular design at " +
                           std::to_string(x0));
    }
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < p; ++i) {
      double v = xtx[i][j];
      for (int k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = v / l[j][j];
    }
  }
  double z[3] = {};
  for (int i = 0; i < p; ++i) {
    double v = xty[i];
    for (int k = 0; k < i; ++k) v -= l[i][k] * z[k];
    z[i] = v / l[i][i];
  }
  double beta0 = 0.0;
  {
    double beta[3] = {};
    for (int i = p - 1; i >= 0; --i) {
      double v = z[i];
      for (int k = i + 1; k < p; ++k) v -= l[k][i] * beta[k];
      beta[i] = v / l[i][i];
    }
    beta0 = beta[0];
  }
  return beta0;
}

double side_bandwidth(const BinnedDistribution& props, const KernelSpec& spec,
                      GrowthSide side) {
  return spec.rule_of_thumb ? rot_bandwidth(props, spec.degree, side)
                            : spec.bandwidth;
}

// All five density readings given per-side bandwidths.
AnomalyStats stats_from_binned(const BinnedDistribution& props, int degree,
                               double h_cuts, double h_raises) {
  const auto centers = props.grid.centers();
  int zero = -1;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i] == 0.0) zero = static_cast<int>(i);
  }
  if (zero < 0) {
    throw std::invalid_argument("anomalies: grid must include the zero bin");
  }
  const double w = props.grid.width;
  const SideSample cuts = side_sample(props, GrowthSide::cuts);
  const SideSample raises = side_sample(props, GrowthSide::raises);
  const double b0 = local_fit(cuts, degree, h_cuts, 0.0);
  const double b2 = local_fit(cuts, degree, h_cuts, -w);
  const double a0 = local_fit(raises, degree, h_raises, 0.0);
  const double a2 = local_fit(raises, degree, h_raises, w);
  return finalize_stats(props.props[zero], a0, a2, b0, b2);
}

struct StatVector {
  static constexpr int kCount = 11;
  double v[kCount];

  static StatVector from(const AnomalyStats& s) {
    return {{s.p0, s.a0, s.a2, s.b0, s.b2, s.bunching_pp, s.bunching_ratio,
             s.discontinuity_pp, s.discontinuity_pct, s.curvature_break_pp,
             s.curvature_ratio}};
  }

  static AnomalyStats se_stats(const std::vector<StatVector>& draws) {
    const double n = static_cast<double>(draws.size());
    double mean[kCount] = {};
    for (const auto& d : draws)
      for (int i = 0; i < kCount; ++i) mean[i] += d.v[i];
    for (int i = 0; i < kCount; ++i) mean[i] /= n;
    double var[kCount] = {};
    for (const auto& d : draws)
      for (int i = 0; i < kCount; ++i) {
        const double c = d.v[i] - mean[i];
        var[i] += c * c;
      }
    AnomalyStats out;
    double* fields[kCount] = {&out.p0,
                              &out.a0,
                              &out.a2,
                              &out.b0,
                              &out.b2,
                              &out.bunching_pp,
                              &out.bunching_ratio,
                              &out.discontinuity_pp,
                              &out.discontinuity_pct,
                              &out.curvature_break_pp,
                              &out.curvature_ratio};
    for (int i = 0; i < kCount; ++i) {
      *fields[i] = n > 1 ? std::sqrt(var[i] / (n - 1.0)) : 0.0;
    }
    return out;
  }
};

void check_two_bins_per_side(const BinnedDistribution& props) {
  if (!props.grid.include_zero_bin) {
    throw std::invalid_argument("anomalies: grid must include the zero bin");
  }
  const int zero = props.grid.zero_index();
  if (zero < 2 || zero + 2 >= props.grid.n_centers()) {
    throw std::invalid_argument("anomalies: need >= 2 bins on each side");
  }
}

}  // namespace

SmoothedSide kernel_density(const BinnedDistribution& props,
                            const KernelSpec& spec, GrowthSide side) {
  const SideSample s = side_sample(props, side);
  if (static_cast<int>(s.x.size()) < spec.degree + 2) {
    throw std::invalid_argument("kernel_density: need at least degree+2 bins");
  }
  const double h = side_bandwidth(props, spec, side);
  SmoothedSide out;
  out.centers = s.x;
  if (side == GrowthSide::cuts) {
    out.centers.push_back(0.0);
  } else {
    out.centers.insert(out.centers.begin(), 0.0);
  }
  out.values.reserve(out.centers.size());
  for (double x0 : out.centers) {
    out.values.push_back(local_fit(s, spec.degree, h, x0));
  }
  return out;
}

double rot_wmse(const BinnedDistribution& props, int degree, GrowthSide side,
                double bandwidth) {
  const SideSample s = side_sample(props, side);
  const double range = std::max(std::abs(s.x.front()), std::abs(s.x.back()));
  const double wscale = range + 0.5 * props.grid.width;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    double pred;
    try {
      pred = local_fit(s, degree, bandwidth, s.x[i], static_cast<int>(i));
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    const double u = s.x[i] / wscale;
    const double w = kEpanechnikov * std::max(0.0, 1.0 - u * u);
    num += w * (pred - s.y[i]) * (pred - s.y[i]);
    den += w;
  }
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

double rot_bandwidth(const BinnedDistribution& props, int degree,
                     GrowthSide side) {
  const SideSample s = side_sample(props, side);
  if (s.x.empty() ||
      std::all_of(s.y.begin(), s.y.end(), [](double v) { return v == 0.0; })) {
    throw std::invalid_argument("rot_bandwidth: degenerate proportions");
  }
  const double w = props.grid.width;
  const double range = std::max(std::abs(s.x.front()), std::abs(s.x.back()));
  const double h_min = (degree + 2) * w;
  const double h_max = std::max(2.0 * range, 2.0 * h_min);
  constexpr int kGridPoints = 160;
  double best_h = h_min;
  double best = std::numeric_limits<double>::infinity();
  const double ratio = std::pow(h_max / h_min, 1.0 / (kGridPoints - 1));
  double h = h_min;
  for (int i = 0; i < kGridPoints; ++i, h *= ratio) {
    const double mse = rot_wmse(props, degree, side, h);
    if (mse < best) {
      best = mse;
      best_h = h;
    }
  }
  if (!std::isfinite(best)) {
    throw NumericalError("rot_bandwidth: no feasible bandwidth");
  }
  return best_h;
}

AnomalyReport anomalies(const BinnedDistribution& props,
                        const KernelSpec& spec) {
  check_two_bins_per_side(props);
  AnomalyReport report;
  report.bandwidth_cuts = side_bandwidth(props, spec, GrowthSide::cuts);
  report.bandwidth_raises = side_bandwidth(props, spec, GrowthSide::raises);
  report.stats = stats_from_binned(props, spec.degree, report.bandwidth_cuts,
                                   report.bandwidth_raises);
  return report;
}

AnomalyReport bootstrap_ses(const BinnedDistribution& props,
                            const KernelSpec& spec, int iterations,
                            std::uint64_t seed, int threads) {
  if (iterations < 100) {
    throw std::invalid_argument("bootstrap_ses: need >= 100 iterations");
  }
  if (!props.n_obs || *props.n_obs <= 0) {
    throw std::invalid_argument("bootstrap_ses: total count required");
  }
  check_two_bins_per_side(props);
  AnomalyReport point = anomalies(props, spec);
  const std::int64_t n = *props.n_obs;
  std::vector<StatVector> draws(iterations);
  num::parallel_for(iterations, threads, [&](std::int64_t it) {
    RngStream rng(seed, static_cast<std::uint64_t>(it) + 1);
    const BinnedDistribution re{props.grid, resample_props(rng, props.props, n),
                                n};
    draws[it] = StatVector::from(stats_from_binned(
        re, spec.degree, point.bandwidth_cuts, point.bandwidth_raises));
  });
  point.ses = StatVector::se_stats(draws);
  return point;
}

AnomalyReport bootstrap_ses(std::span<const double> growth, const BinGrid& grid,
                            const KernelSpec& spec, int iterations,
                            std::uint64_t seed, int threads,
                            ResampleMode mode) {
  const BinnedDistribution binned = bin_growth(growth, grid);
  if (mode == ResampleMode::multinomial_bins) {
    return bootstrap_ses(binned, spec, iterations, seed, threads);
  }
  if (iterations < 100) {
    throw std::invalid_argument("bootstrap_ses: need >= 100 iterations");
  }
  if (growth.empty()) {
    throw std::invalid_argument("bootstrap_ses: empty sample");
  }
  check_two_bins_per_side(binned);
  AnomalyReport point = anomalies(binned, spec);
  const std::int64_t n = static_cast<std::int64_t>(growth.size());
  std::vector<StatVector> draws(iterations);
  num::parallel_for(iterations, threads, [&](std::int64_t it) {
    RngStream rng(seed, static_cast<std::uint64_t>(it) + 1);
    std::vector<double> sample(n);
    for (std::int64_t i = 0; i < n; ++i) {
      // rejection-free index draw via 64-bit floor; bias is negligible for
      // any realistic n
      const double u = rng.next_double();
      sample[i] = growth[static_cast<std::size_t>(u * n)];
    }
    const BinnedDistribution re = bin_growth(sample, grid);
    draws[it] = StatVector::from(stats_from_binned(
        re, spec.degree, point.bandwidth_cuts, point.bandwidth_raises));
  });
  point.ses = StatVector::se_stats(draws);
  return point;
}

}  // namespace lossav::anomaly
