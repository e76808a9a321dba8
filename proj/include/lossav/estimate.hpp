#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "lossav/anomaly.hpp"
#include "lossav/bins.hpp"
#include "lossav/linalg.hpp"
#include "lossav/model.hpp"

namespace lossav::est {

enum class WeightScheme { identity, optimal };
enum class EmpiricalSource { kernel_smoothed, raw_proportions };

// Minimum-distance setup. Defaults are the primary specification: bins of
// width 0.002 between -0.2 and +0.2 excluding the zero bin, identity
// weights, logistic heterogeneity, kernel-smoothed empirical proportions
// (local-linear, Epanechnikov, bandwidth 0.020), amenity calibration
// mu_eps = 0 and sigma_eps = 0.611.
struct EstimationSpec {
  BinGrid grid{-0.2, 0.2, 0.002, false};
  WeightScheme weights = WeightScheme::identity;
  Family het_family = Family::logistic;
  EmpiricalSource source = EmpiricalSource::kernel_smoothed;
  double mu_eps = 0.0;
  double sigma_eps = 0.611;
  bool restrict_lambda_to_one = false;
  anomaly::KernelSpec kernel{};
  // Moment scalings applied inside the test statistics (percent for the
  // goodness-of-fit statistic, proportions for the distance test). The
  // studentized statistics are invariant to these by construction; the
  // knobs exist for sensitivity analysis of the raw criterion values.
  double gof_moment_scale = 100.0;
  double qlr_moment_scale = 1.0;
};

ModelParams make_params(const EstimationSpec& spec, double lambda,
                        double mu_phi, double sigma_phi);

// Applies the empirical-source pipeline: raw proportions pass through,
// kernel smoothing replaces each non-zero bin with its side fit (the zero
// bin, when present, keeps its raw value).
BinnedDistribution prepare_empirical(const BinnedDistribution& raw,
                                     const EstimationSpec& spec);
BinnedDistribution prepare_empirical(std::span<const double> growth,
                                     const EstimationSpec& spec);

// Sum of weighted squared distances between predicted and empirical
// proportions. Identity weights are 1; optimal weights are the inverse
// multinomial variances n / (p_b (1 - p_b)).
double criterion(const ModelParams& p, const BinnedDistribution& empirical,
                 const EstimationSpec& spec);

struct EstimationResult {
  double lambda_hat = 1.0;
  double mu_phi_hat = 0.0;
  double sigma_phi_hat = 1.0;
  std::optional<std::array<double, 3>> ses;
  double criterion = 0.0;
  std::optional<double> gof_chi2;
  std::optional<double> gof_critical;
  std::optional<double> qlr_chi2;
  std::optional<double> qlr_critical;
  bool converged = false;
  std::int64_t n_evals = 0;
  bool lambda_restricted = false;
  // Set by sandwich_ses when lambda_hat - 1 < 2 SE(lambda); near the
  // boundary the usual normal approximation is one-sided.
  bool lambda_at_boundary = false;
};

// Nelder-Mead minimum distance over (log(lambda - 1 + 1e-8), mu_phi,
// log sigma_phi) with five deterministic starts spread around `start`.
// The reparameterization keeps lambda >= 1 without clipping. Throws after
// all restarts fail to converge; the exception message carries the best
// point seen.
EstimationResult fit(const BinnedDistribution& empirical,
                     const EstimationSpec& spec, const ModelParams& start,
                     int threads = 1);

// Covariance of empirical proportions across multinomial resamples of the
// raw bin counts, with the empirical-source pipeline reapplied per draw.
la::Mat bootstrap_cov(const BinnedDistribution& raw_props,
                      const EstimationSpec& spec, int iterations,
                      std::uint64_t seed, int threads = 1);

// Finite-difference Jacobian of predicted proportions in the free
// parameters at the fitted point (columns: lambda unless restricted,
// mu_phi, sigma_phi). Relative step 1e-5; one-sided in lambda at the
// boundary.
la::Mat jacobian(const EstimationResult& result, const EstimationSpec& spec);

// Sandwich standard errors
// sqrt(diag((G'WG)^-1 G'W Sigma WG (G'WG)^-1)) with the bootstrap
// covariance Sigma. Flags the lambda boundary on the result.
std::array<double, 3> sandwich_ses(EstimationResult& result,
                                   const BinnedDistribution& empirical,
                                   const EstimationSpec& spec,
                                   const la::Mat& sigma);

// Overidentification test with non-optimal weights: the studentized
// quadratic form of residual moments with covariance
// M Sigma M', M = I - G (G'WG)^-1 G'W, rank k - p, compared against the
// chi-square 0.95 critical value.
std::pair<double, double> gof_test(const EstimationResult& result,
                                   const BinnedDistribution& empirical,
                                   const EstimationSpec& spec,
                                   const la::Mat& sigma);

// Distance test between the lambda-restricted and unrestricted fits:
// n (Q_r - Q_u) scaled by the profiled-direction variance correction for
// non-optimal weights, one degree of freedom.
std::pair<double, double> qlr_test(const EstimationResult& unrestricted,
                                   const EstimationResult& restricted,
                                   const BinnedDistribution& empirical,
                                   const EstimationSpec& spec);

}  // namespace lossav::est
