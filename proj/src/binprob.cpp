#include "lossav/binprob.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lossav/common.hpp"
#include "lossav/numerics.hpp"

namespace lossav::binprob {

namespace {

// Stay just inside the mills tail clamp; the acceptance rate is ~7e-18 at
// this depth so the truncated mass is far below quadrature tolerance.
constexpr double kSafeScales = 39.5;

struct Limits {
  double cut_lo;    // <= 0
  double raise_hi;  // >= 0
};

Limits integration_limits(const ModelParams& p) {
  const Wedge w = salary_match_wedge(p);
  const double mu_e = p.eps.location;
  const double s_e = p.eps.scale;
  const double span_phi = 20.0 * p.phi.scale;
  const double cut_cov = std::min(p.phi.location - span_phi - w.lo, 0.0);
  const double cut_safe = -(std::max(mu_e, 0.0) + kSafeScales * s_e) / p.lambda;
  const double raise_cov = std::max(p.phi.location + span_phi, 0.0);
  const double raise_safe = kSafeScales * s_e - std::min(mu_e, 0.0);
  return {std::max(cut_cov, cut_safe), std::min(raise_cov, raise_safe)};
}

double wedge_mass(const ModelParams& p) {
  const Wedge w = salary_match_wedge(p);
  return acceptance_rate(p, 0.0) * (cdf(p.phi, w.hi) - cdf(p.phi, w.lo));
}

}  // namespace

double accepted_mass(const ModelParams& p) {
  const Limits lim = integration_limits(p);
  double cut = 0.0, raise = 0.0;
  if (lim.cut_lo < 0.0) {
    cut = num::integrate(
        [&](double r) {
          return acceptance_rate(p, r) * pdf(p.phi, detail::phi_cut(p, r)) *
                 detail::phi_cut_deriv(p, r);
        },
        lim.cut_lo, 0.0, 1e-10, 1e-9);
  }
  if (lim.raise_hi > 0.0) {
    raise = num::integrate(
        [&](double r) {
          return acceptance_rate(p, r) * pdf(p.phi, detail::phi_raise(p, r)) *
                 detail::phi_raise_deriv(p, r);
        },
        0.0, lim.raise_hi, 1e-10, 1e-9);
  }
  const double a = cut + raise + wedge_mass(p);
  if (!(a > 0.0 && a <= 1.0 + 1e-9)) {
    throw NumericalError("accepted_mass: A(theta) = " + std::to_string(a) +
                         " outside (0, 1]");
  }
  return std::min(a, 1.0);
}

BinnedDistribution predicted_props(const ModelParams& p, const BinGrid& grid) {
  const double a_total = accepted_mass(p);
  const double half = 0.5 * grid.width;
  const auto centers = grid.centers();
  BinnedDistribution out{grid, std::vector<double>(centers.size(), 0.0),
                         std::nullopt};
  // F_phi at implied productivities of shared bin edges, cached per side.
  const double p_at_zero = acceptance_rate(p, 0.0);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double c = centers[i];
    if (c < 0.0) {
      const double f_hi = cdf(p.phi, detail::phi_cut(p, c + half));
      const double f_lo = cdf(p.phi, detail::phi_cut(p, c - half));
      out.props[i] = acceptance_rate(p, c) * (f_hi - f_lo) / a_total;
    } else if (c > 0.0) {
      const double f_hi = cdf(p.phi, detail::phi_raise(p, c + half));
      const double f_lo = cdf(p.phi, detail::phi_raise(p, c - half));
      out.props[i] = acceptance_rate(p, c) * (f_hi - f_lo) / a_total;
    } else {
      const double f_hi = cdf(p.phi, detail::phi_raise(p, half));
      const double f_lo = cdf(p.phi, detail::phi_cut(p, -half));
      out.props[i] = p_at_zero * (f_hi - f_lo) / a_total;
    }
  }
  return out;
}

anomaly::AnomalyReport predicted_anomalies(const ModelParams& p,
                                           const BinGrid& grid) {
  if (!grid.include_zero_bin) {
    throw std::invalid_argument(
        "predicted_anomalies: grid must include the zero bin");
  }
  const int zero = grid.zero_index();
  if (zero < 2 || zero + 2 >= grid.n_centers()) {
    throw std::invalid_argument(
        "predicted_anomalies: need >= 2 bins on each side");
  }
  const double a_total = accepted_mass(p);
  const double w = grid.width;
  const double half = 0.5 * w;
  const double p_at_zero = acceptance_rate(p, 0.0);
  // Smooth one-sided counterfactuals at the zero bin: each side's implied
  // productivity map extended across zero.
  const double a0 = p_at_zero *
                    (cdf(p.phi, detail::phi_raise(p, half)) -
                     cdf(p.phi, detail::phi_raise(p, -half))) /
                    a_total;
  const double b0 = p_at_zero *
                    (cdf(p.phi, detail::phi_cut(p, half)) -
                     cdf(p.phi, detail::phi_cut(p, -half))) /
                    a_total;
  const double a2 = acceptance_rate(p, w) *
                    (cdf(p.phi, detail::phi_raise(p, w + half)) -
                     cdf(p.phi, detail::phi_raise(p, w - half))) /
                    a_total;
  const double b2 = acceptance_rate(p, -w) *
                    (cdf(p.phi, detail::phi_cut(p, -w + half)) -
                     cdf(p.phi, detail::phi_cut(p, -w - half))) /
                    a_total;
  const double p0 = p_at_zero *
                    (cdf(p.phi, detail::phi_raise(p, half)) -
                     cdf(p.phi, detail::phi_cut(p, -half))) /
                    a_total;
  anomaly::AnomalyReport report;
  report.stats = anomaly::finalize_stats(p0, a0, a2, b0, b2);
  return report;
}

}  // namespace lossav::binprob
