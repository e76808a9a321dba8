#pragma once

#include "lossav/dist.hpp"

namespace lossav {

// The five structural parameters: loss aversion lambda plus the two
// heterogeneity families. `phi` carries (mu_phi, sigma_phi) for labor
// productivity relative to the current wage, `eps` carries
// (mu_eps, sigma_eps) for non-wage amenities relative to the current job.
struct ModelParams {
  double lambda;
  HetFamily phi;
  HetFamily eps;

  ModelParams(double lambda, HetFamily phi, HetFamily eps);
};

// Productivity band [phi_L(0), phi_G(0)] whose optimal offer is exactly a
// salary match (r = 0). Collapses to a point at lambda = 1.
struct Wedge {
  double lo;
  double hi;
};

enum class Side { left, right };

// Job seeker utility of relative offer r given an amenity draw:
// lambda^{1{r<0}} * r + eps_draw. Staying put is worth 0.
double utility(const ModelParams& p, double r, double eps_draw);

// Probability that offer r is accepted: 1 - F_eps(-lambda^{1{r<0}} r).
// Kinked at r = 0 with left slope lambda times the right slope.
double acceptance_rate(const ModelParams& p, double r);

// One-sided derivative of the acceptance rate. `side` only matters at the
// kink r = 0.
double acceptance_slope(const ModelParams& p, double r, Side side);

// Firm's expected profit from offering r to a worker of productivity phi:
// acceptance_rate(r) * (phi - r).
double expected_profit(const ModelParams& p, double phi, double r);

// d expected_profit / dr = -p(r) + p'(r) (phi - r); one-sided at r = 0.
double marginal_profit(const ModelParams& p, double phi, double r, Side side);

// Salary-matching band of productivities: lo = mills_eps(0)/lambda,
// hi = mills_eps(0).
Wedge salary_match_wedge(const ModelParams& p);

// Productivity implied by an observed optimal offer r != 0:
//   phi_L(r) = r + mills_eps(-lambda r)/lambda   for r < 0
//   phi_G(r) = r + mills_eps(-r)                 for r > 0
// Both strictly increasing in r. At r = 0 the inverse is the whole wedge;
// calling implied_phi(0) is an error directing the caller to
// salary_match_wedge.
double implied_phi(const ModelParams& p, double r);

// Profit-maximizing offer for a given productivity. Exactly 0 inside the
// wedge; otherwise the unique root of the one-sided first-order condition,
// found by Brent with brackets derived from the monotone implied-phi maps
// (tolerance 1e-10 on r).
double optimal_offer(const ModelParams& p, double phi);

namespace detail {
// phi_L / phi_G extended to the whole line (natural analytic continuation);
// used by the censored-distribution math and smooth-counterfactual limits.
double phi_cut(const ModelParams& p, double r);
double phi_raise(const ModelParams& p, double r);
double phi_cut_deriv(const ModelParams& p, double r);
double phi_raise_deriv(const ModelParams& p, double r);
}  // namespace detail

}  // namespace lossav
