#pragma once

#include <vector>

#include "lossav/bins.hpp"
#include "lossav/model.hpp"

namespace lossav::policy {

struct OfferMix {
  double share_cuts = 0.0;
  double share_matches = 0.0;
  double share_raises = 0.0;
  double avg_offer = 0.0;
  double avg_cut = 0.0;    // conditional on a pay cut
  double avg_raise = 0.0;  // conditional on a pay raise
};

// A hiring subsidy delta (log-wage units) paid to the employer; equivalent
// to shifting the productivity distribution right by delta.
struct SubsidyScenario {
  ModelParams params;
  double delta;

  SubsidyScenario(ModelParams params, double delta);
};

// Salary history ban: employers observe current salaries with zero-location
// noise eta, optimize on perceived productivity/offers, and realized growth
// is the perceived offer plus the perception error.
struct BanScenario {
  ModelParams params;
  HetFamily eta;

  BanScenario(ModelParams params, HetFamily eta);
};

struct PolicyOutcome {
  OfferMix mix;  // evaluated under the scenario (post-subsidy offers)
  double passthrough_total = 0.0;
  double passthrough_marginal = 0.0;
  double passthrough_inframarginal = 0.0;
};

struct PassthroughOptions {
  int grid_points = 2001;     // productivity grid resolution
  double span_scales = 8.0;   // grid half-width in sigma_phi units
  bool acceptance_weighted = true;
};

// Composition and averages of offers under the model: shares of pay cuts /
// salary matches / pay raises and (conditional) average offers, by
// quadrature against the productivity density.
OfferMix offer_mix(const ModelParams& p);

// Pass-through of the subsidy to offers. Per productivity the offer change
// over delta; aggregated over the productivity grid weighted by the
// post-subsidy acceptance probability (or unweighted when
// acceptance_weighted is off). Marginal workers accept only with the
// subsidy, inframarginal workers accept either way; their weights are
// p(new) - p(old) and p(old).
PolicyOutcome passthrough(const SubsidyScenario& s,
                          const PassthroughOptions& opt = {});

struct CurvePoint {
  double phi;
  double offer_nosub;
  double offer_sub;
  double passthrough;
};

// Per-productivity offers with and without the subsidy on the grid.
std::vector<CurvePoint> passthrough_curve(const SubsidyScenario& s,
                                          const PassthroughOptions& opt = {});

struct BanResult {
  PolicyOutcome outcome;
  BinnedDistribution realized_growth;   // includes the smeared former point mass
  BinnedDistribution perceived_growth;  // point mass stays at zero
};

// Ban outcome by tensor quadrature over (perceived productivity, noise).
// Per draw the subsidy response equals the no-ban response at the perceived
// productivity; acceptance weights use the realized offer.
BanResult passthrough_ban(const BanScenario& s, double delta,
                          const BinGrid& grid,
                          const PassthroughOptions& opt = {},
                          int eta_nodes = 65);

// Steady-state vacancy count maximizing J pbar - c J^2.
double optimal_vacancies(double pbar, double c);

// Expected per-vacancy profit for a firm of productivity psi against a
// distribution of current wages: E[ p(r*) (phi - r*) ] at phi = psi - w.
double expected_vacancy_profit(const ModelParams& p, double psi,
                               const BinnedDistribution& current_wages);
double expected_vacancy_profit(const ModelParams& p, double psi,
                               const HetFamily& current_wages);

}  // namespace lossav::policy
