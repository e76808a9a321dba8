#pragma once

#include "lossav/anomaly.hpp"
#include "lossav/bins.hpp"
#include "lossav/model.hpp"

namespace lossav::binprob {

// Total probability that a wage offer is accepted: the offer-density
// integrals over pay cuts and pay raises (with the change-of-variables
// Jacobian) plus the salary-match point mass
// p(0) [F_phi(phi_G(0)) - F_phi(phi_L(0))]. Adaptive quadrature to ~1e-9;
// integration limits cover 20 scales of both families and stay clear of the
// mills tail clamp (the acceptance rate is ~1e-17 out there).
double accepted_mass(const ModelParams& p);

// Predicted proportion of accepted offers per salary-growth bin,
// conditional on acceptance (normalized by accepted_mass). The acceptance
// rate is evaluated at bin midpoints; productivity mass enters through
// differences of F_phi at implied productivities of the bin edges. The zero
// bin spans [-w/2, w/2] and carries the salary-match point mass plus the
// continuous mass inside the bin, so a full-support grid sums to one.
BinnedDistribution predicted_props(const ModelParams& p, const BinGrid& grid);

// Model-implied anomaly statistics on a grid: the raw zero-bin proportion
// against the analytic one-sided smooth-density limits, combined with the
// same arithmetic as the empirical estimator. Grid must include the zero
// bin with at least two bins per side.
anomaly::AnomalyReport predicted_anomalies(const ModelParams& p,
                                           const BinGrid& grid);

}  // namespace lossav::binprob
