#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lossav/bins.hpp"

namespace lossav::anomaly {

enum class GrowthSide { cuts, raises };

// Local-polynomial smoother settings. The kernel is fixed Epanechnikov;
// degree 1 (local linear) is the primary choice. A bandwidth <= 0 together
// with rule_of_thumb selects the side-specific RoT bandwidth.
struct KernelSpec {
  int degree = 1;
  double bandwidth = 0.020;  // log points
  bool rule_of_thumb = false;

  KernelSpec() = default;
  KernelSpec(int degree, double bandwidth);
  static KernelSpec rot(int degree);
};

// The five density readings around zero and the statistics built from them.
// Everything is in per-bin proportion units. a* come from the pay-raise side
// fit, b* from the pay-cut side fit; subscript 0 is the zero boundary and 2
// the adjacent bin on that side's own side.
struct AnomalyStats {
  double p0 = 0.0;  // raw zero-bin share
  double a0 = 0.0, a2 = 0.0;
  double b0 = 0.0, b2 = 0.0;
  double bunching_pp = 0.0;        // p0 - a0
  double bunching_ratio = 0.0;     // (p0 - a0) / a0
  double discontinuity_pp = 0.0;   // a0 - b0
  double discontinuity_pct = 0.0;  // (a0 - b0) / b0
  double curvature_break_pp = 0.0;  // (b0 - b2) - (a2 - a0)
  double curvature_ratio = 0.0;     // (b0 - b2) / (a2 - a0)
};

struct AnomalyReport {
  AnomalyStats stats;
  std::optional<AnomalyStats> ses;
  double bandwidth_cuts = 0.0;
  double bandwidth_raises = 0.0;
};

// Fills the derived statistics from the five density readings.
AnomalyStats finalize_stats(double p0, double a0, double a2, double b0, double b2);

// Locally weighted polynomial fit of bin proportions on bin midpoints for
// one side, zero bin excluded from the sample. Fitted values are returned at
// every bin midpoint on that side plus the zero boundary; centers ascending,
// so 0 is the last entry for cuts and the first for raises.
struct SmoothedSide {
  std::vector<double> centers;
  std::vector<double> values;
};

SmoothedSide kernel_density(const BinnedDistribution& props, const KernelSpec& spec,
                            GrowthSide side);

// Rule-of-thumb bandwidth: minimizes a leave-one-out weighted MSE of the
// side fit over a deterministic bandwidth grid. Weights are Epanechnikov in
// distance from the zero boundary, so accuracy near zero dominates.
double rot_bandwidth(const BinnedDistribution& props, int degree, GrowthSide side);

// The LOO criterion behind rot_bandwidth, exposed for diagnostics/tests.
double rot_wmse(const BinnedDistribution& props, int degree, GrowthSide side,
                double bandwidth);

// Point estimates of bunching, discontinuity and curvature break. The grid
// must include the zero bin with at least two bins on each side.
AnomalyReport anomalies(const BinnedDistribution& props, const KernelSpec& spec);

enum class ResampleMode { multinomial_bins, observations };

// Bootstrap standard errors by resampling bin counts (multinomial over bins
// plus an implicit out-of-grid bucket) and recomputing the report each
// draw. Deterministic given the seed; independent of the worker count.
AnomalyReport bootstrap_ses(const BinnedDistribution& props, const KernelSpec& spec,
                            int iterations, std::uint64_t seed, int threads = 1);

// Observation-level variant: resamples the raw growth values.
AnomalyReport bootstrap_ses(std::span<const double> growth, const BinGrid& grid,
                            const KernelSpec& spec, int iterations,
                            std::uint64_t seed, int threads = 1,
                            ResampleMode mode = ResampleMode::multinomial_bins);

}  // namespace lossav::anomaly
