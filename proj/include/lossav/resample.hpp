#pragma once

#include <cstdint>
#include <vector>

#include "lossav/rng.hpp"

namespace lossav {

// Exact binomial draw: sequential inversion for small means, BTRS
// transformed rejection (Hormann 1993) otherwise. O(1) amortized and
// deterministic given the stream state.
std::int64_t draw_binomial(RngStream& rng, std::int64_t n, double p);

// Multinomial resample over (props..., out-of-grid remainder) via
// conditional binomials; returns resampled proportions with denominator n.
std::vector<double> resample_props(RngStream& rng,
                                   const std::vector<double>& props,
                                   std::int64_t n);

}  // namespace lossav
