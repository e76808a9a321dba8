#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lossav/binprob.hpp"
#include "lossav/common.hpp"
#include "lossav/estimate.hpp"
#include "lossav/resample.hpp"
#include "lossav/rng.hpp"

using namespace lossav;
using namespace lossav::est;

namespace {

constexpr double kTrueLambda = 1.123;
constexpr double kTrueMu = 1.2;
constexpr double kTrueSigma = 0.5;

// Synthetic bin-level data: one multinomial draw of n observations over the
// model's predicted proportions on a wide grid, reported on the estimation
// grid. Exactly the model's binned data-generating process.
BinnedDistribution synthetic_empirical(const EstimationSpec& spec,
                                       double lambda, double mu, double sigma,
                                       std::int64_t n, std::uint64_t seed) {
  const BinGrid wide(-1.0, 1.0, spec.grid.width, true);
  const auto full =
      binprob::predicted_props(make_params(spec, lambda, mu, sigma), wide);
  RngStream rng(seed, 0);
  const auto drawn = resample_props(rng, full.props, n);
  BinnedDistribution out{spec.grid,
                         std::vector<double>(spec.grid.included_count(), 0.0),
                         n};
  const auto wide_centers = wide.centers();
  for (std::size_t i = 0; i < wide_centers.size(); ++i) {
    const int idx = spec.grid.included_index(wide_centers[i]);
    if (idx >= 0) out.props[idx] = drawn[i];
  }
  return out;
}

}  // namespace

TEST_CASE("criterion basics") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const auto p = make_params(spec, kTrueLambda, kTrueMu, kTrueSigma);
  auto empirical = binprob::predicted_props(p, spec.grid);
  CHECK(criterion(p, empirical, spec) == doctest::Approx(0.0).epsilon(1e-18));
  // quadratic form: perturbing one bin by delta raises it by delta^2
  const double delta = 3e-4;
  empirical.props[17] += delta;
  CHECK(criterion(p, empirical, spec) ==
        doctest::Approx(delta * delta).epsilon(1e-9));
  // grid mismatch rejected
  EstimationSpec other = spec;
  other.grid = BinGrid(-0.1, 0.1, 0.002, false);
  CHECK_THROWS_AS(criterion(p, empirical, other), std::invalid_argument);
}

TEST_CASE("optimal weights upweight small bins") {
  EstimationSpec spec;
  spec.weights = WeightScheme::optimal;
  spec.source = EmpiricalSource::raw_proportions;
  const auto p = make_params(spec, kTrueLambda, kTrueMu, kTrueSigma);
  auto empirical = binprob::predicted_props(p, spec.grid);
  empirical.n_obs = 1000000;
  // same absolute deviation in a small tail bin vs the central bin must
  // contribute more to the criterion
  auto tail_bump = empirical;
  auto center_bump = empirical;
  const int tail = 0;
  const int center = spec.grid.included_index(0.002);
  REQUIRE(empirical.props[tail] < empirical.props[center]);
  tail_bump.props[tail] += 1e-4;
  center_bump.props[center] += 1e-4;
  CHECK(criterion(p, tail_bump, spec) > criterion(p, center_bump, spec));
}

TEST_CASE("kernel-smoothed empirical pipeline") {
  EstimationSpec spec;
  const auto raw = synthetic_empirical(spec, kTrueLambda, kTrueMu, kTrueSigma,
                                       2000000, 11);
  const auto smoothed = prepare_empirical(raw, spec);
  CHECK(smoothed.props.size() == raw.props.size());
  // smoothing reduces roughness: sum of squared second differences falls
  auto roughness = [&](const BinnedDistribution& d) {
    double acc = 0.0;
    for (std::size_t i = 2; i < d.props.size(); ++i) {
      const double dd = d.props[i] - 2.0 * d.props[i - 1] + d.props[i - 2];
      acc += dd * dd;
    }
    return acc;
  };
  CHECK(roughness(smoothed) < roughness(raw));
  EstimationSpec raw_spec = spec;
  raw_spec.source = EmpiricalSource::raw_proportions;
  const auto untouched = prepare_empirical(raw, raw_spec);
  CHECK(untouched.props == raw.props);
}

TEST_CASE("fit recovers synthetic truth") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const auto empirical = synthetic_empirical(spec, kTrueLambda, kTrueMu,
                                             kTrueSigma, 4000000, 21);
  const auto start = make_params(spec, 1.05, 1.0, 0.6);
  const auto result = fit(empirical, spec, start, 4);
  CHECK(result.converged);
  CHECK(result.lambda_hat == doctest::Approx(kTrueLambda).epsilon(0.01));
  CHECK(result.mu_phi_hat == doctest::Approx(kTrueMu).epsilon(0.01));
  CHECK(result.sigma_phi_hat == doctest::Approx(kTrueSigma).epsilon(0.01));
  CHECK(result.criterion >= 0.0);
  CHECK(result.n_evals > 100);
}

TEST_CASE("restricted fit pins lambda at one") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  spec.restrict_lambda_to_one = true;
  const auto empirical = synthetic_empirical(spec, 1.0, kTrueMu, kTrueSigma,
                                             1000000, 22);
  const auto result = fit(empirical, spec, make_params(spec, 1.0, 1.0, 0.6), 4);
  CHECK(result.lambda_hat == 1.0);
  CHECK(result.lambda_restricted);
  CHECK(result.mu_phi_hat == doctest::Approx(kTrueMu).epsilon(0.02));
}

TEST_CASE("lambda-one data fitted freely stays near the boundary") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const auto empirical =
      synthetic_empirical(spec, 1.0, kTrueMu, kTrueSigma, 2000000, 23);
  const auto result = fit(empirical, spec, make_params(spec, 1.1, 1.1, 0.55), 4);
  CHECK(result.lambda_hat >= 1.0);
  CHECK(result.lambda_hat < 1.02);
}

TEST_CASE("jacobian matches directional differences") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  EstimationResult at;
  at.lambda_hat = kTrueLambda;
  at.mu_phi_hat = kTrueMu;
  at.sigma_phi_hat = kTrueSigma;
  const auto g = jacobian(at, spec);
  const double h = 1e-5;
  const auto base_up = binprob::predicted_props(
      make_params(spec, kTrueLambda + h, kTrueMu, kTrueSigma), spec.grid);
  const auto base_dn = binprob::predicted_props(
      make_params(spec, kTrueLambda - h, kTrueMu, kTrueSigma), spec.grid);
  double worst = 0.0;
  for (std::size_t b = 0; b < base_up.props.size(); ++b) {
    const double fd = (base_up.props[b] - base_dn.props[b]) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g(b, 0)));
  }
  CHECK(worst < 1e-5 * std::max(1.0, std::abs(kTrueLambda)));
}

TEST_CASE("bootstrap covariance matches multinomial moments") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const std::int64_t n = 500000;
  const auto empirical =
      synthetic_empirical(spec, kTrueLambda, kTrueMu, kTrueSigma, n, 31);
  const auto cov = bootstrap_cov(empirical, spec, 8000, 7, 8);
  int checked = 0;
  double offdiag_sum = 0.0;
  for (std::size_t b = 0; b < empirical.props.size(); b += 9) {
    const double pb = empirical.props[b];
    if (pb < 1e-4) continue;
    const double expect = pb * (1.0 - pb) / n;
    CHECK(cov(b, b) == doctest::Approx(expect).epsilon(0.10));
    ++checked;
  }
  CHECK(checked > 10);
  for (std::size_t i = 0; i < empirical.props.size(); i += 7) {
    for (std::size_t j = i + 1; j < empirical.props.size(); j += 11) {
      offdiag_sum += cov(i, j);
    }
  }
  CHECK(offdiag_sum < 0.0);  // multinomial covariances are negative
  // deterministic by seed
  const auto cov2 = bootstrap_cov(empirical, spec, 500, 7, 1);
  const auto cov3 = bootstrap_cov(empirical, spec, 500, 7, 8);
  CHECK(cov2.a == cov3.a);
}

TEST_CASE("sandwich standard errors") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const std::int64_t n = 2000000;
  const auto empirical =
      synthetic_empirical(spec, kTrueLambda, kTrueMu, kTrueSigma, n, 41);
  auto result = fit(empirical, spec, make_params(spec, 1.08, 1.1, 0.55), 4);
  const auto sigma = bootstrap_cov(empirical, spec, 600, 13, 8);
  const auto ses = sandwich_ses(result, empirical, spec, sigma);
  CHECK(ses[0] > 0.0);
  CHECK(ses[1] > 0.0);
  CHECK(ses[2] > 0.0);
  // homogeneity: scaling Sigma by c scales SEs by sqrt(c)
  la::Mat scaled = sigma;
  for (double& v : scaled.a) v *= 4.0;
  EstimationResult result2 = result;
  const auto ses2 = sandwich_ses(result2, empirical, spec, scaled);
  for (int i = 0; i < 3; ++i) {
    CHECK(ses2[i] == doctest::Approx(2.0 * ses[i]).epsilon(1e-9));
  }
  // recovery within 3 SEs on this draw
  CHECK(std::abs(result.lambda_hat - kTrueLambda) < 3.0 * ses[0]);
  CHECK(std::abs(result.mu_phi_hat - kTrueMu) < 3.0 * ses[1]);
  CHECK(std::abs(result.sigma_phi_hat - kTrueSigma) < 3.0 * ses[2]);
}

TEST_CASE("sandwich collapses to the optimal-weight form when W = Sigma^-1") {
  // small synthetic problem where Sigma is well conditioned
  EstimationSpec spec;
  spec.grid = BinGrid(-0.02, 0.02, 0.002, false);
  spec.source = EmpiricalSource::raw_proportions;
  const auto p = make_params(spec, 1.2, 1.2, 0.5);
  auto empirical = binprob::predicted_props(p, spec.grid);
  empirical.n_obs = 100000;
  EstimationResult result;
  result.lambda_hat = 1.2;
  result.mu_phi_hat = 1.2;
  result.sigma_phi_hat = 0.5;
  const std::size_t k = empirical.props.size();
  la::Mat sigma(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    sigma(i, i) = empirical.props[i] * (1.0 - empirical.props[i]) / 100000.0 +
                  1e-12;
  }
  // identity-weight sandwich with W = Sigma^-1 equals (G' Sigma^-1 G)^-1
  const auto g = jacobian(result, spec);
  const la::Mat sigma_inv = la::inverse_spd(sigma);
  const la::Mat gt = la::transpose(g);
  const la::Mat opt = la::inverse_spd(la::matmul(la::matmul(gt, sigma_inv), g));
  // build the sandwich with W = Sigma^-1 by hand
  const la::Mat gtw = la::matmul(gt, sigma_inv);
  const la::Mat bread_inv = la::inverse_spd(la::matmul(gtw, g));
  const la::Mat meat = la::matmul(la::matmul(gtw, sigma), la::transpose(gtw));
  const la::Mat cov = la::matmul(la::matmul(bread_inv, meat), bread_inv);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::sqrt(cov(i, i)) ==
          doctest::Approx(std::sqrt(opt(i, i))).epsilon(1e-8));
  }
}

TEST_CASE("gof test: degrees of freedom and size behavior") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const std::int64_t n = 1000000;
  const auto empirical =
      synthetic_empirical(spec, kTrueLambda, kTrueMu, kTrueSigma, n, 51);
  auto result = fit(empirical, spec, make_params(spec, 1.1, 1.15, 0.52), 4);
  // analytic multinomial covariance of the empirical proportions
  const std::size_t k = empirical.props.size();
  la::Mat sigma(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double pi = empirical.props[i], pj = empirical.props[j];
      sigma(i, j) = (i == j ? pi * (1.0 - pi) : -pi * pj) / n;
    }
  }
  const auto [chi2, critical] = gof_test(result, empirical, spec, sigma);
  CHECK(critical ==
        doctest::Approx(num::chi2_quantile(0.95, k - 3)).epsilon(1e-12));
  CHECK(chi2 > 0.0);
  CHECK(chi2 < 2.0 * critical);  // not wildly off under the null
  // restricted dof is k - 2
  EstimationSpec rspec = spec;
  rspec.restrict_lambda_to_one = true;
  const auto rempirical = synthetic_empirical(rspec, 1.0, kTrueMu, kTrueSigma,
                                              n, 52);
  la::Mat rsigma(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double pi = rempirical.props[i], pj = rempirical.props[j];
      rsigma(i, j) = (i == j ? pi * (1.0 - pi) : -pi * pj) / n;
    }
  }
  auto rresult = fit(rempirical, rspec, make_params(rspec, 1.0, 1.1, 0.55), 4);
  const auto [rchi2, rcritical] = gof_test(rresult, rempirical, rspec, rsigma);
  CHECK(rcritical ==
        doctest::Approx(num::chi2_quantile(0.95, k - 2)).epsilon(1e-12));
  CHECK(rchi2 > 0.0);
}

TEST_CASE("qlr test") {
  EstimationSpec spec;
  spec.source = EmpiricalSource::raw_proportions;
  const std::int64_t n = 2000000;
  const auto empirical =
      synthetic_empirical(spec, kTrueLambda, kTrueMu, kTrueSigma, n, 61);
  auto unres = fit(empirical, spec, make_params(spec, 1.08, 1.1, 0.55), 4);
  EstimationSpec rspec = spec;
  rspec.restrict_lambda_to_one = true;
  auto res = fit(empirical, rspec, make_params(rspec, 1.0, 1.1, 0.55), 4);
  const auto [chi2, critical] = qlr_test(unres, res, empirical, spec);
  CHECK(critical == doctest::Approx(3.8414588206941260).epsilon(1e-9));
  CHECK(chi2 > critical);  // power at the true lambda = 1.123
  // restricted == unrestricted -> statistic 0
  auto clone = unres;
  clone.lambda_restricted = true;
  const auto [zero_chi2, crit2] = qlr_test(unres, clone, empirical, spec);
  CHECK(zero_chi2 == 0.0);
  // ordering violation -> error
  auto bad = res;
  bad.criterion = unres.criterion - 1e-3;
  CHECK_THROWS_AS(qlr_test(unres, bad, empirical, spec), NumericalError);
  // argument order enforced
  CHECK_THROWS_AS(qlr_test(res, unres, empirical, spec), std::invalid_argument);
}

TEST_CASE("normal-family spec fits its own synthetic data") {
  EstimationSpec spec;
  spec.het_family = Family::normal;
  spec.source = EmpiricalSource::raw_proportions;
  const auto empirical =
      synthetic_empirical(spec, 1.15, 1.0, 0.8, 2000000, 71);
  const auto result = fit(empirical, spec, make_params(spec, 1.05, 0.9, 0.7), 4);
  CHECK(result.lambda_hat == doctest::Approx(1.15).epsilon(0.02));
  CHECK(result.mu_phi_hat == doctest::Approx(1.0).epsilon(0.02));
  CHECK(result.sigma_phi_hat == doctest::Approx(0.8).epsilon(0.03));
}
