#include "lossav/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lossav/binprob.hpp"
#include "lossav/common.hpp"
#include "lossav/numerics.hpp"
#include "lossav/resample.hpp"
#include "lossav/rng.hpp"

namespace lossav::est {

namespace {

constexpr double kLambdaFloorShift = 1e-8;

double lambda_from(double u) {
  return std::max(1.0, 1.0 - kLambdaFloorShift + std::exp(u));
}

double u_from_lambda(double lambda) {
  return std::log(std::max(lambda - 1.0, 0.0) + kLambdaFloorShift);
}

std::vector<double> bin_weights(const BinnedDistribution& empirical,
                                const EstimationSpec& spec) {
  const std::size_t k = empirical.props.size();
  std::vector<double> w(k, 1.0);
  if (spec.weights == WeightScheme::optimal) {
    if (!empirical.n_obs || *empirical.n_obs <= 0) {
      throw std::invalid_argument(
          "criterion: optimal weights need the empirical sample size");
    }
    const double n = static_cast<double>(*empirical.n_obs);
    for (std::size_t b = 0; b < k; ++b) {
      // Variance floor at half an observation keeps empty bins from getting
      // infinite weight.
      const double pb = std::clamp(empirical.props[b], 0.5 / n, 1.0 - 0.5 / n);
      w[b] = n / (pb * (1.0 - pb));
    }
  }
  return w;
}

// Smooth each side's proportions with fixed per-side bandwidths, keeping the
// zero bin raw.
BinnedDistribution smooth_with(const BinnedDistribution& raw,
                               const anomaly::KernelSpec& spec, double h_cuts,
                               double h_raises) {
  anomaly::KernelSpec cut_spec(spec.degree, h_cuts);
  anomaly::KernelSpec raise_spec(spec.degree, h_raises);
  const auto cuts =
      anomaly::kernel_density(raw, cut_spec, anomaly::GrowthSide::cuts);
  const auto raises =
      anomaly::kernel_density(raw, raise_spec, anomaly::GrowthSide::raises);
  BinnedDistribution out = raw;
  const auto centers = raw.grid.centers();
  std::size_t ci = 0, ri = 0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i] < 0.0) {
      while (ci < cuts.centers.size() && cuts.centers[ci] < centers[i]) ++ci;
      if (ci < cuts.centers.size() && cuts.centers[ci] == centers[i]) {
        out.props[i] = cuts.values[ci];
      }
    } else if (centers[i] > 0.0) {
      while (ri < raises.centers.size() && raises.centers[ri] < centers[i]) ++ri;
      if (ri < raises.centers.size() && raises.centers[ri] == centers[i]) {
        out.props[i] = raises.values[ri];
      }
    }
  }
  return out;
}

struct ResolvedKernel {
  double h_cuts;
  double h_raises;
};

ResolvedKernel resolve_kernel(const BinnedDistribution& raw,
                              const anomaly::KernelSpec& spec) {
  if (spec.rule_of_thumb) {
    return {anomaly::rot_bandwidth(raw, spec.degree, anomaly::GrowthSide::cuts),
            anomaly::rot_bandwidth(raw, spec.degree,
                                   anomaly::GrowthSide::raises)};
  }
  return {spec.bandwidth, spec.bandwidth};
}

}  // namespace

ModelParams make_params(const EstimationSpec& spec, double lambda,
                        double mu_phi, double sigma_phi) {
  return ModelParams(lambda, HetFamily(spec.het_family, mu_phi, sigma_phi),
                     HetFamily(spec.het_family, spec.mu_eps, spec.sigma_eps));
}

BinnedDistribution prepare_empirical(const BinnedDistribution& raw,
                                     const EstimationSpec& spec) {
  if (!(raw.grid == spec.grid)) {
    throw std::invalid_argument("prepare_empirical: bin grid mismatch");
  }
  if (spec.source == EmpiricalSource::raw_proportions) return raw;
  const ResolvedKernel rk = resolve_kernel(raw, spec.kernel);
  return smooth_with(raw, spec.kernel, rk.h_cuts, rk.h_raises);
}

BinnedDistribution prepare_empirical(std::span<const double> growth,
                                     const EstimationSpec& spec) {
  return prepare_empirical(bin_growth(growth, spec.grid), spec);
}

double criterion(const ModelParams& p, const BinnedDistribution& empirical,
                 const EstimationSpec& spec) {
  if (!(empirical.grid == spec.grid)) {
    throw std::invalid_argument("criterion: bin grid mismatch");
  }
  const BinnedDistribution predicted = binprob::predicted_props(p, spec.grid);
  const auto w = bin_weights(empirical, spec);
  double q = 0.0;
  for (std::size_t b = 0; b < predicted.props.size(); ++b) {
    const double d = predicted.props[b] - empirical.props[b];
    q += w[b] * d * d;
  }
  return q;
}

namespace {

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::int64_t n_evals = 0;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const std::vector<double>& step, double f_tol,
                             double x_tol, int max_iter) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> xs(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i) xs[i + 1][i] += step[i];
  std::vector<double> fs(dim + 1);
  NelderMeadResult res;
  for (std::size_t i = 0; i <= dim; ++i) {
    fs[i] = f(xs[i]);
    ++res.n_evals;
  }
  auto order = [&] {
    std::vector<std::size_t> idx(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<std::vector<double>> xs2(dim + 1);
    std::vector<double> fs2(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };
  for (int iter = 0; iter < max_iter; ++iter) {
    order();
    double diam = 0.0;
    for (std::size_t i = 1; i <= dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        diam = std::max(diam, std::abs(xs[i][j] - xs[0][j]));
    if (std::abs(fs[dim] - fs[0]) < f_tol && diam < x_tol) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += xs[i][j] / dim;
    auto point = [&](double coef) {
      std::vector<double> p(dim);
      for (std::size_t j = 0; j < dim; ++j)
        p[j] = centroid[j] + coef * (xs[dim][j] - centroid[j]);
      return p;
    };
    const auto xr = point(-1.0);
    const double fr = f(xr);
    ++res.n_evals;
    if (fr < fs[0]) {
      const auto xe = point(-2.0);
      const double fe = f(xe);
      ++res.n_evals;
      if (fe < fr) {
        xs[dim] = xe;
        fs[dim] = fe;
      } else {
        xs[dim] = xr;
        fs[dim] = fr;
      }
    } else if (fr < fs[dim - 1]) {
      xs[dim] = xr;
      fs[dim] = fr;
    } else {
      const bool outside = fr < fs[dim];
      const auto xc = point(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      ++res.n_evals;
      if (fc < (outside ? fr : fs[dim])) {
        xs[dim] = xc;
        fs[dim] = fc;
      } else {
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t j = 0; j < dim; ++j)
            xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
          fs[i] = f(xs[i]);
          ++res.n_evals;
        }
      }
    }
  }
  order();
  res.x = xs[0];
  res.f = fs[0];
  return res;
}

}  // namespace

EstimationResult fit(const BinnedDistribution& empirical,
                     const EstimationSpec& spec, const ModelParams& start,
                     int threads) {
  if (!(empirical.grid == spec.grid)) {
    throw std::invalid_argument("fit: bin grid mismatch");
  }
  const bool restricted = spec.restrict_lambda_to_one;
  const std::size_t dim = restricted ? 2 : 3;

  auto objective = [&](const std::vector<double>& x) {
    const double lambda = restricted ? 1.0 : lambda_from(x[0]);
    const double mu = restricted ? x[0] : x[1];
    const double sigma = std::exp(restricted ? x[1] : x[2]);
    return criterion(make_params(spec, lambda, mu, sigma), empirical, spec);
  };

  std::vector<double> x0;
  if (!restricted) x0.push_back(u_from_lambda(start.lambda));
  x0.push_back(start.phi.location);
  x0.push_back(std::log(start.phi.scale));

  // Deterministic multi-start lattice in the transformed space.
  static const double kOffsets[5][3] = {{0.0, 0.0, 0.0},
                                        {1.5, 0.0, 0.0},
                                        {-1.5, 0.15, 0.3},
                                        {0.0, -0.15, -0.3},
                                        {0.75, 0.3, -0.3}};
  std::vector<NelderMeadResult> runs(5);
  num::parallel_for(5, threads, [&](std::int64_t s) {
    std::vector<double> xs = x0;
    for (std::size_t j = 0; j < dim; ++j) {
      xs[j] += kOffsets[s][restricted ? j + 1 : j];
    }
    std::vector<double> step = restricted
                                   ? std::vector<double>{0.05, 0.1}
                                   : std::vector<double>{0.7, 0.05, 0.1};
    runs[s] = nelder_mead(objective, xs, step, 1e-12, 1e-8, 4000);
  });

  int best = -1;
  std::int64_t evals = 0;
  for (int s = 0; s < 5; ++s) {
    evals += runs[s].n_evals;
    if (!runs[s].converged) continue;
    if (best < 0 || runs[s].f < runs[best].f) best = s;
  }
  if (best < 0) {
    // All restarts hit the iteration cap; surface the best point seen.
    int fallback = 0;
    for (int s = 1; s < 5; ++s)
      if (runs[s].f < runs[fallback].f) fallback = s;
    const auto& x = runs[fallback].x;
    throw NumericalError(
        "fit: optimizer failed to converge on all restarts; best criterion " +
        std::to_string(runs[fallback].f) + " at lambda " +
        std::to_string(restricted ? 1.0 : lambda_from(x[0])));
  }
  const auto& x = runs[best].x;
  EstimationResult res;
  res.lambda_restricted = restricted;
  res.lambda_hat = restricted ? 1.0 : lambda_from(x[0]);
  res.mu_phi_hat = restricted ? x[0] : x[1];
  res.sigma_phi_hat = std::exp(restricted ? x[1] : x[2]);
  res.criterion = runs[best].f;
  res.converged = true;
  res.n_evals = evals;
  return res;
}

la::Mat bootstrap_cov(const BinnedDistribution& raw_props,
                      const EstimationSpec& spec, int iterations,
                      std::uint64_t seed, int threads) {
  if (iterations < 100) {
    throw std::invalid_argument("bootstrap_cov: need >= 100 iterations");
  }
  if (!raw_props.n_obs || *raw_props.n_obs <= 0) {
    throw std::invalid_argument("bootstrap_cov: raw sample size required");
  }
  if (!(raw_props.grid == spec.grid)) {
    throw std::invalid_argument("bootstrap_cov: bin grid mismatch");
  }
  const std::int64_t n = *raw_props.n_obs;
  const std::size_t k = raw_props.props.size();
  const bool smooth = spec.source == EmpiricalSource::kernel_smoothed;
  ResolvedKernel rk{0.0, 0.0};
  if (smooth) rk = resolve_kernel(raw_props, spec.kernel);
  std::vector<std::vector<double>> draws(iterations);
  num::parallel_for(iterations, threads, [&](std::int64_t it) {
    RngStream rng(seed, static_cast<std::uint64_t>(it) + 1);
    BinnedDistribution re{raw_props.grid,
                          resample_props(rng, raw_props.props, n), n};
    draws[it] = smooth
                    ? smooth_with(re, spec.kernel, rk.h_cuts, rk.h_raises).props
                    : std::move(re.props);
  });
  std::vector<double> mean(k, 0.0);
  for (const auto& d : draws)
    for (std::size_t b = 0; b < k; ++b) mean[b] += d[b];
  for (double& m : mean) m /= iterations;
  la::Mat cov(k, k);
  for (const auto& d : draws) {
    for (std::size_t i = 0; i < k; ++i) {
      const double ci = d[i] - mean[i];
      if (ci == 0.0) continue;
      for (std::size_t j = i; j < k; ++j) {
        cov(i, j) += ci * (d[j] - mean[j]);
      }
    }
  }
  const double denom = iterations - 1;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }
  return cov;
}

namespace {

std::vector<double> predicted_at(const EstimationSpec& spec, double lambda,
                                 double mu, double sigma) {
  return binprob::predicted_props(make_params(spec, lambda, mu, sigma),
                                  spec.grid)
      .props;
}

}  // namespace

la::Mat jacobian(const EstimationResult& result, const EstimationSpec& spec) {
  const double lam = result.lambda_hat;
  const double mu = result.mu_phi_hat;
  const double sg = result.sigma_phi_hat;
  const std::size_t k = spec.grid.included_count();
  const std::size_t p = result.lambda_restricted ? 2 : 3;
  la::Mat g(k, p);
  std::size_t col = 0;
  if (!result.lambda_restricted) {
    const double h = 1e-5 * std::max(1.0, std::abs(lam));
    std::vector<double> up = predicted_at(spec, lam + h, mu, sg);
    if (lam - h >= 1.0) {
      const auto dn = predicted_at(spec, lam - h, mu, sg);
      for (std::size_t b = 0; b < k; ++b)
        g(b, col) = (up[b] - dn[b]) / (2.0 * h);
    } else {
      const auto at = predicted_at(spec, lam, mu, sg);
      for (std::size_t b = 0; b < k; ++b) g(b, col) = (up[b] - at[b]) / h;
    }
    ++col;
  }
  {
    const double h = 1e-5 * std::max(1.0, std::abs(mu));
    const auto up = predicted_at(spec, lam, mu + h, sg);
    const auto dn = predicted_at(spec, lam, mu - h, sg);
    for (std::size_t b = 0; b < k; ++b) g(b, col) = (up[b] - dn[b]) / (2.0 * h);
    ++col;
  }
  {
    const double h = 1e-5 * std::max(1.0, std::abs(sg));
    const auto up = predicted_at(spec, lam, mu, sg + h);
    const auto dn = predicted_at(spec, lam, mu, sg - h);
    for (std::size_t b = 0; b < k; ++b) g(b, col) = (up[b] - dn[b]) / (2.0 * h);
  }
  return g;
}

namespace {

la::Mat weight_matrix(const BinnedDistribution& empirical,
                      const EstimationSpec& spec) {
  const auto w = bin_weights(empirical, spec);
  la::Mat out(w.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out(i, i) = w[i];
  return out;
}

}  // namespace

std::array<double, 3> sandwich_ses(EstimationResult& result,
                                   const BinnedDistribution& empirical,
                                   const EstimationSpec& spec,
                                   const la::Mat& sigma) {
  const la::Mat g = jacobian(result, spec);
  const la::Mat w = weight_matrix(empirical, spec);
  const la::Mat gt = la::transpose(g);
  const la::Mat gtw = la::matmul(gt, w);
  const la::Mat bread = la::matmul(gtw, g);  // G'WG, p x p
  la::Mat bread_inv;
  try {
    bread_inv = la::inverse_spd(bread);
  } catch (const NumericalError&) {
    throw NumericalError(
        "sandwich_ses: G'WG is singular (parameters not locally identified)");
  }
  const la::Mat meat =
      la::matmul(la::matmul(gtw, sigma), la::transpose(gtw));  // G'W Sigma WG
  const la::Mat cov = la::matmul(la::matmul(bread_inv, meat), bread_inv);
  std::array<double, 3> ses{std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  std::size_t col = 0;
  if (!result.lambda_restricted) {
    ses[0] = std::sqrt(std::max(0.0, cov(col, col)));
    ++col;
  }
  ses[1] = std::sqrt(std::max(0.0, cov(col, col)));
  ses[2] = std::sqrt(std::max(0.0, cov(col + 1, col + 1)));
  result.ses = ses;
  if (!result.lambda_restricted) {
    result.lambda_at_boundary = (result.lambda_hat - 1.0) < 2.0 * ses[0];
  }
  return ses;
}

std::pair<double, double> gof_test(const EstimationResult& result,
                                   const BinnedDistribution& empirical,
                                   const EstimationSpec& spec,
                                   const la::Mat& sigma) {
  const std::size_t k = empirical.props.size();
  const std::size_t p = result.lambda_restricted ? 2 : 3;
  if (k <= p) {
    throw std::invalid_argument("gof_test: no overidentifying restrictions");
  }
  const double s = spec.gof_moment_scale;
  const auto predicted =
      predicted_at(spec, result.lambda_hat, result.mu_phi_hat,
                   result.sigma_phi_hat);
  std::vector<double> moments(k);
  for (std::size_t b = 0; b < k; ++b) {
    moments[b] = s * (predicted[b] - empirical.props[b]);
  }
  const la::Mat g = jacobian(result, spec);
  const la::Mat w = weight_matrix(empirical, spec);
  const la::Mat gt = la::transpose(g);
  const la::Mat gtw = la::matmul(gt, w);
  const la::Mat bread_inv = la::inverse_spd(la::matmul(gtw, g));
  // M = I - G (G'WG)^-1 G'W
  const la::Mat proj = la::matmul(g, la::matmul(bread_inv, gtw));  // k x k
  la::Mat m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) m(i, j) = (i == j ? 1.0 : 0.0) - proj(i, j);
  }
  la::Mat sigma_scaled = sigma;
  for (double& v : sigma_scaled.a) v *= s * s;
  const la::Mat v = la::matmul(la::matmul(m, sigma_scaled), la::transpose(m));
  const la::Mat v_pinv = la::pinv_sym(v);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) row += v_pinv(i, j) * moments[j];
    chi2 += moments[i] * row;
  }
  const double dof = static_cast<double>(k - p);
  return {chi2, num::chi2_quantile(0.95, dof)};
}

std::pair<double, double> qlr_test(const EstimationResult& unrestricted,
                                   const EstimationResult& restricted,
                                   const BinnedDistribution& empirical,
                                   const EstimationSpec& spec) {
  if (unrestricted.lambda_restricted || !restricted.lambda_restricted) {
    throw std::invalid_argument(
        "qlr_test: pass the unrestricted fit first, the lambda = 1 fit second");
  }
  if (!empirical.n_obs || *empirical.n_obs <= 0) {
    throw std::invalid_argument("qlr_test: empirical sample size required");
  }
  double dq = restricted.criterion - unrestricted.criterion;
  const double tol = 1e-9 * std::max(restricted.criterion, 1e-30);
  if (dq < -tol) {
    throw NumericalError(
        "qlr_test: restricted criterion below unrestricted (optimizer "
        "failure); difference " +
        std::to_string(dq));
  }
  dq = std::max(dq, 0.0);
  const double n = static_cast<double>(*empirical.n_obs);

  // Profile the lambda direction out of the Jacobian and studentize the
  // criterion difference for non-optimal weights:
  //   n (Q_r - Q_u) ~ [gt'W Sigma1 W gt / gt'W gt] chi2(1)
  // with gt the lambda column of G orthogonalized (in the W inner product)
  // against the (mu, sigma) columns and Sigma1 the per-observation
  // multinomial covariance diag(p) - p p' of the empirical proportions.
  // The qlr moment scale cancels in this ratio.
  const la::Mat g = jacobian(unrestricted, spec);
  const std::size_t k = g.rows;
  const auto wdiag = bin_weights(empirical, spec);
  double a11 = 0, a12 = 0, a22 = 0, c1 = 0, c2 = 0;
  for (std::size_t b = 0; b < k; ++b) {
    a11 += wdiag[b] * g(b, 1) * g(b, 1);
    a12 += wdiag[b] * g(b, 1) * g(b, 2);
    a22 += wdiag[b] * g(b, 2) * g(b, 2);
    c1 += wdiag[b] * g(b, 1) * g(b, 0);
    c2 += wdiag[b] * g(b, 2) * g(b, 0);
  }
  const double det = a11 * a22 - a12 * a12;
  if (std::abs(det) < 1e-300) {
    throw NumericalError("qlr_test: psi block singular");
  }
  const double b1 = (a22 * c1 - a12 * c2) / det;
  const double b2 = (a11 * c2 - a12 * c1) / det;
  double curv = 0.0;      // gt' W gt
  double diag_term = 0.0;  // sum (W gt)_b^2 p_b
  double dot_p = 0.0;      // sum (W gt)_b p_b
  for (std::size_t b = 0; b < k; ++b) {
    const double gt = g(b, 0) - b1 * g(b, 1) - b2 * g(b, 2);
    const double wg = wdiag[b] * gt;
    curv += wdiag[b] * gt * gt;
    diag_term += wg * wg * empirical.props[b];
    dot_p += wg * empirical.props[b];
  }
  const double scale_var = diag_term - dot_p * dot_p;
  if (!(scale_var > 0.0) || !(curv > 0.0)) {
    throw NumericalError("qlr_test: degenerate studentization scale");
  }
  const double chi2 = n * dq * curv / scale_var;
  return {chi2, num::chi2_quantile(0.95, 1.0)};
}

}  // namespace lossav::est
