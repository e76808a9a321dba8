#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lossav/bins.hpp"
#include "lossav/model.hpp"

namespace lossav::sim {

struct SimConfig {
  ModelParams params;
  std::int64_t n_jobseekers;
  std::uint64_t seed = 0;
  bool record_rejected = true;
  int threads = 1;

  SimConfig(ModelParams params, std::int64_t n_jobseekers, std::uint64_t seed);
};

struct OfferRecord {
  double phi;
  double eps;
  double offer;
  bool accepted;
};

struct SimOutput {
  std::vector<OfferRecord> offers;  // all offers, or accepted only when
                                    // record_rejected is false
  std::vector<double> realized;     // accepted offers in job-seeker order
  std::int64_t n_offers = 0;
  std::int64_t n_accepted = 0;
  // Offers whose maximized expected profit is negative; the model still
  // makes them (they are simply likely to be rejected), this count surfaces
  // how often that happens.
  std::int64_t n_negative_profit = 0;
};

// Draw (phi, eps) per job seeker from the model families, offer
// optimal_offer(phi), accept when utility is strictly positive. Each job
// seeker owns Philox stream (seed, index), so output is bit-identical for a
// given seed regardless of thread count.
SimOutput simulate(const SimConfig& cfg);

// As simulate but binning realized growth on the fly; avoids materializing
// per-offer records for large n. Returned proportions are relative to
// accepted offers.
struct BinnedSim {
  BinnedDistribution realized;
  std::int64_t n_offers = 0;
  std::int64_t n_accepted = 0;
};
BinnedSim simulate_binned(const SimConfig& cfg, const BinGrid& grid);

// Placebo: salary growth from independently resampled previous/new log
// salaries. Mass only lands in the zero bin when the two marginals share
// exact values.
BinnedDistribution placebo_independent(std::span<const double> prev_log_salaries,
                                       std::span<const double> new_log_salaries,
                                       const BinGrid& grid, std::int64_t n,
                                       std::uint64_t seed);

// Placebo: new salaries resampled conditional on the drawn previous salary,
// reweighting the empirical new-salary distribution by a smooth growth
// density centered at the previous salary. Throws when the reweighted
// distribution degenerates to all-zero weights for some previous salary.
BinnedDistribution placebo_conditional(
    std::span<const double> prev_log_salaries,
    std::span<const double> new_log_salaries,
    const std::function<double(double)>& smooth_growth_density,
    const BinGrid& grid, std::int64_t n, std::uint64_t seed);

}  // namespace lossav::sim
