#include "lossav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lossav/common.hpp"
#include "lossav/numerics.hpp"

namespace lossav::policy {

SubsidyScenario::SubsidyScenario(ModelParams params_, double delta_)
    : params(std::move(params_)), delta(delta_) {
  if (!std::isfinite(delta) || delta < 0.0) {
    throw std::invalid_argument("SubsidyScenario: delta must be >= 0");
  }
}

BanScenario::BanScenario(ModelParams params_, HetFamily eta_)
    : params(std::move(params_)), eta(eta_) {
  if (eta.location != 0.0) {
    throw std::invalid_argument("BanScenario: eta must have location 0");
  }
}

namespace {

// Productivity range over which optimal_offer is evaluated: covers 20
// phi-scales but stays clear of the amenity-family tail clamp inside the
// offer root finder.
struct PhiRange {
  double lo;
  double hi;
};

// `headroom` reserves room above the grid for evaluating offers at
// phi + delta without hitting the amenity tail clamp.
PhiRange safe_phi_range(const ModelParams& p, double span_scales,
                        double headroom = 0.0) {
  const Wedge w = salary_match_wedge(p);
  const double s_e = p.eps.scale;
  const double mu_e = p.eps.location;
  const double cov_lo = p.phi.location - span_scales * p.phi.scale;
  const double cov_hi = p.phi.location + span_scales * p.phi.scale;
  const double safe_lo = w.lo - (39.0 * s_e + std::max(0.0, mu_e)) / p.lambda;
  const double safe_hi = w.hi + 39.0 * s_e - std::min(0.0, mu_e) - headroom;
  return {std::max(cov_lo, safe_lo), std::min(cov_hi, safe_hi)};
}

}  // namespace

OfferMix offer_mix(const ModelParams& p) {
  const Wedge w = salary_match_wedge(p);
  OfferMix mix;
  mix.share_cuts = cdf(p.phi, w.lo);
  mix.share_matches = cdf(p.phi, w.hi) - cdf(p.phi, w.lo);
  mix.share_raises = 1.0 - cdf(p.phi, w.hi);
  const PhiRange range = safe_phi_range(p, 20.0);
  double cut_sum = 0.0, raise_sum = 0.0;
  if (range.lo < w.lo) {
    cut_sum = num::integrate(
        [&](double phi) { return optimal_offer(p, phi) * pdf(p.phi, phi); },
        range.lo, w.lo, 1e-11, 1e-9);
  }
  if (range.hi > w.hi) {
    raise_sum = num::integrate(
        [&](double phi) { return optimal_offer(p, phi) * pdf(p.phi, phi); },
        w.hi, range.hi, 1e-11, 1e-9);
  }
  mix.avg_offer = cut_sum + raise_sum;  // matches contribute 0
  mix.avg_cut = mix.share_cuts > 0.0 ? cut_sum / mix.share_cuts : 0.0;
  mix.avg_raise = mix.share_raises > 0.0 ? raise_sum / mix.share_raises : 0.0;
  return mix;
}

namespace {

// Composite-Simpson weights over an odd-sized uniform grid.
double simpson_coef(int i, int n) {
  if (i == 0 || i == n - 1) return 1.0;
  return (i % 2 == 1) ? 4.0 : 2.0;
}

ModelParams shifted(const ModelParams& p, double delta) {
  return ModelParams(
      p.lambda, HetFamily(p.phi.kind, p.phi.location + delta, p.phi.scale),
      p.eps);
}

}  // namespace

std::vector<CurvePoint> passthrough_curve(const SubsidyScenario& s,
                                          const PassthroughOptions& opt) {
  if (!(s.delta > 0.0)) {
    throw std::invalid_argument("passthrough_curve: delta must be > 0");
  }
  const ModelParams& p = s.params;
  int n = std::max(opt.grid_points, 5);
  if (n % 2 == 0) ++n;
  const PhiRange range = safe_phi_range(p, opt.span_scales, s.delta);
  std::vector<CurvePoint> out(n);
  const double step = (range.hi - range.lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double phi = range.lo + i * step;
    const double r0 = optimal_offer(p, phi);
    const double r1 = optimal_offer(p, phi + s.delta);
    out[i] = {phi, r0, r1, (r1 - r0) / s.delta};
  }
  return out;
}

PolicyOutcome passthrough(const SubsidyScenario& s,
                          const PassthroughOptions& opt) {
  PolicyOutcome outcome;
  outcome.mix = offer_mix(shifted(s.params, s.delta));
  if (s.delta == 0.0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    outcome.passthrough_total = nan;
    outcome.passthrough_marginal = nan;
    outcome.passthrough_inframarginal = nan;
    return outcome;
  }
  const ModelParams& p = s.params;
  const auto curve = passthrough_curve(s, opt);
  const int n = static_cast<int>(curve.size());
  double tot_num = 0.0, tot_den = 0.0;
  double marg_num = 0.0, marg_den = 0.0;
  double infra_num = 0.0, infra_den = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& pt = curve[i];
    const double f = pdf(p.phi, pt.phi) * simpson_coef(i, n);
    const double p_old = acceptance_rate(p, pt.offer_nosub);
    const double p_new = acceptance_rate(p, pt.offer_sub);
    const double w_tot = opt.acceptance_weighted ? p_new : 1.0;
    const double w_marg = p_new - p_old;
    tot_num += f * w_tot * pt.passthrough;
    tot_den += f * w_tot;
    marg_num += f * w_marg * pt.passthrough;
    marg_den += f * w_marg;
    infra_num += f * p_old * pt.passthrough;
    infra_den += f * p_old;
  }
  outcome.passthrough_total = tot_den > 0.0 ? tot_num / tot_den : 0.0;
  outcome.passthrough_marginal = marg_den > 0.0 ? marg_num / marg_den : 0.0;
  outcome.passthrough_inframarginal =
      infra_den > 0.0 ? infra_num / infra_den : 0.0;
  return outcome;
}

BanResult passthrough_ban(const BanScenario& s, double delta,
                          const BinGrid& grid, const PassthroughOptions& opt,
                          int eta_nodes) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("passthrough_ban: delta must be > 0");
  }
  if (eta_nodes < 1) {
    throw std::invalid_argument("passthrough_ban: need >= 1 eta node");
  }
  const ModelParams& p = s.params;
  const Wedge w = salary_match_wedge(p);

  // Perceived-productivity grid; offers depend on (phi, eta) only through
  // x = phi - eta, so offers are computed once per grid point.
  int n = std::max(opt.grid_points, 5);
  if (n % 2 == 0) ++n;
  const PhiRange base = safe_phi_range(p, opt.span_scales, delta);
  const PhiRange hard = safe_phi_range(p, 1e9, delta);
  const double eta_span = 12.0 * s.eta.scale;
  const double x_lo = std::max(base.lo - eta_span, hard.lo);
  const double x_hi = std::min(base.hi + eta_span, hard.hi);
  const double step = (x_hi - x_lo) / (n - 1);
  std::vector<double> x(n), r0(n), r1(n);
  for (int i = 0; i < n; ++i) {
    x[i] = x_lo + i * step;
    r0[i] = optimal_offer(p, x[i]);
    r1[i] = optimal_offer(p, x[i] + delta);
  }

  // Midpoint nodes of the eta distribution, equal mass each.
  std::vector<double> eta(eta_nodes);
  for (int j = 0; j < eta_nodes; ++j) {
    eta[j] = quantile(s.eta, (j + 0.5) / eta_nodes);
  }

  BanResult res{PolicyOutcome{},
                BinnedDistribution{grid, std::vector<double>(grid.included_count(), 0.0), std::nullopt},
                BinnedDistribution{grid, std::vector<double>(grid.included_count(), 0.0), std::nullopt}};
  double tot_num = 0, tot_den = 0, marg_num = 0, marg_den = 0, infra_num = 0,
         infra_den = 0;
  double realized_total = 0.0, perceived_total = 0.0;
  auto add_mass = [&](BinnedDistribution& dist, double r, double mass) {
    const int idx = grid.included_index(r);
    if (idx >= 0) dist.props[idx] += mass;
  };
  for (int j = 0; j < eta_nodes; ++j) {
    const double e = eta[j];
    const double node_mass = 1.0 / eta_nodes;
    for (int i = 0; i < n; ++i) {
      // x = perceived productivity; true phi = x + e with density f_phi.
      const double f = pdf(p.phi, x[i] + e) * simpson_coef(i, n) * step / 3.0 *
                       node_mass;
      if (f <= 0.0) continue;
      const double realized_old = r0[i] + e;
      const double realized_new = r1[i] + e;
      const double p_old = acceptance_rate(p, realized_old);
      const double p_new = acceptance_rate(p, realized_new);
      const double pt = (r1[i] - r0[i]) / delta;
      const double w_tot = opt.acceptance_weighted ? p_new : 1.0;
      tot_num += f * w_tot * pt;
      tot_den += f * w_tot;
      marg_num += f * (p_new - p_old) * pt;
      marg_den += f * (p_new - p_old);
      infra_num += f * p_old * pt;
      infra_den += f * p_old;
      // No-subsidy realized growth distribution (the ban's headline
      // figure): continuous part outside the wedge only; the wedge point
      // mass is added analytically below.
      if (x[i] < w.lo || x[i] > w.hi) {
        const double acc = f * p_old;
        add_mass(res.realized_growth, realized_old, acc);
        add_mass(res.perceived_growth, r0[i], acc);
        realized_total += acc;
        perceived_total += acc;
      }
    }
    // Wedge: perceived productivity in [w.lo, w.hi], perceived offer 0,
    // realized offer e.
    const double wedge_mass =
        (cdf(p.phi, w.hi + e) - cdf(p.phi, w.lo + e)) / eta_nodes;
    const double acc = wedge_mass * acceptance_rate(p, e);
    add_mass(res.realized_growth, e, acc);
    add_mass(res.perceived_growth, 0.0, acc);
    realized_total += acc;
    perceived_total += acc;
  }
  res.outcome.mix = offer_mix(shifted(p, delta));
  res.outcome.passthrough_total = tot_den > 0.0 ? tot_num / tot_den : 0.0;
  res.outcome.passthrough_marginal = marg_den > 0.0 ? marg_num / marg_den : 0.0;
  res.outcome.passthrough_inframarginal =
      infra_den > 0.0 ? infra_num / infra_den : 0.0;
  if (realized_total > 0.0) {
    for (double& v : res.realized_growth.props) v /= realized_total;
  }
  if (perceived_total > 0.0) {
    for (double& v : res.perceived_growth.props) v /= perceived_total;
  }
  return res;
}

double optimal_vacancies(double pbar, double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("optimal_vacancies: c must be > 0");
  }
  if (!(pbar >= 0.0)) {
    throw std::invalid_argument("optimal_vacancies: pbar must be >= 0");
  }
  return pbar / (2.0 * c);
}

namespace {

double vacancy_profit_at(const ModelParams& p, double phi) {
  const double r = optimal_offer(p, phi);
  return expected_profit(p, phi, r);
}

}  // namespace

double expected_vacancy_profit(const ModelParams& p, double psi,
                               const BinnedDistribution& current_wages) {
  double total_w = 0.0, total = 0.0;
  const auto centers = current_wages.grid.centers();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double weight = current_wages.props[i];
    if (weight <= 0.0) continue;
    total += weight * vacancy_profit_at(p, psi - centers[i]);
    total_w += weight;
  }
  if (total_w <= 0.0) {
    throw std::invalid_argument(
        "expected_vacancy_profit: empty wage distribution");
  }
  return total / total_w;
}

double expected_vacancy_profit(const ModelParams& p, double psi,
                               const HetFamily& current_wages) {
  // phi = psi - w; integrate over w keeping phi inside the safe offer range.
  const PhiRange range = safe_phi_range(p, 20.0);
  const double w_lo = std::max(psi - range.hi,
                               current_wages.location - 20.0 * current_wages.scale);
  const double w_hi = std::min(psi - range.lo,
                               current_wages.location + 20.0 * current_wages.scale);
  if (!(w_hi > w_lo)) {
    throw std::invalid_argument(
        "expected_vacancy_profit: wage support does not overlap the feasible "
        "productivity range");
  }
  return num::integrate(
      [&](double w) {
        return vacancy_profit_at(p, psi - w) * pdf(current_wages, w);
      },
      w_lo, w_hi, 1e-11, 1e-9);
}

}  // namespace lossav::policy
