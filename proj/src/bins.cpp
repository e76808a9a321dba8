#include "lossav/bins.hpp"

#include <cmath>
#include <stdexcept>

namespace lossav {

BinGrid::BinGrid(double lo_, double hi_, double width_, bool include_zero_bin_)
    : lo(lo_), hi(hi_), width(width_), include_zero_bin(include_zero_bin_) {
  if (!(width > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    throw std::invalid_argument("BinGrid: need finite lo <= hi and width > 0");
  }
  const double span_bins = (hi - lo) / width;
  const double rounded = std::round(span_bins);
  if (std::abs(span_bins - rounded) > 1e-6) {
    throw std::invalid_argument(
        "BinGrid: (hi - lo) must be an integer multiple of width");
  }
  n_centers_ = static_cast<int>(rounded) + 1;
  const double zero_offset = -lo / width;
  const double zero_rounded = std::round(zero_offset);
  if (std::abs(zero_offset - zero_rounded) > 1e-6 || zero_rounded < 0 ||
      zero_rounded >= n_centers_) {
    throw std::invalid_argument("BinGrid: a bin must be centered at 0");
  }
  zero_index_ = static_cast<int>(zero_rounded);
}

std::vector<double> BinGrid::centers() const {
  std::vector<double> out;
  out.reserve(included_count());
  for (int i = 0; i < n_centers_; ++i) {
    if (!include_zero_bin && i == zero_index_) continue;
    out.push_back(center(i));
  }
  return out;
}

int BinGrid::included_count() const {
  return include_zero_bin ? n_centers_ : n_centers_ - 1;
}

int BinGrid::included_index(double r) const {
  // Half-open [c - w/2, c + w/2), topmost bin closed.
  const double pos = r / width + zero_index_;
  int idx = static_cast<int>(std::floor(pos + 0.5));
  if (idx == n_centers_ && r <= center(n_centers_ - 1) + 0.5 * width) {
    idx = n_centers_ - 1;
  }
  if (idx < 0 || idx >= n_centers_) return -1;
  if (!include_zero_bin) {
    if (idx == zero_index_) return -1;
    return idx > zero_index_ ? idx - 1 : idx;
  }
  return idx;
}

bool BinGrid::operator==(const BinGrid& other) const {
  return lo == other.lo && hi == other.hi && width == other.width &&
         include_zero_bin == other.include_zero_bin;
}

std::vector<std::int64_t> bin_counts(std::span<const double> growth,
                                     const BinGrid& grid) {
  std::vector<std::int64_t> counts(grid.included_count(), 0);
  for (double r : growth) {
    const int idx = grid.included_index(r);
    if (idx >= 0) ++counts[idx];
  }
  return counts;
}

BinnedDistribution bin_growth(std::span<const double> growth,
                              const BinGrid& grid) {
  const auto counts = bin_counts(growth, grid);
  BinnedDistribution out{grid, std::vector<double>(counts.size(), 0.0),
                         static_cast<std::int64_t>(growth.size())};
  if (!growth.empty()) {
    const double inv = 1.0 / static_cast<double>(growth.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      out.props[i] = static_cast<double>(counts[i]) * inv;
    }
  }
  return out;
}

}  // namespace lossav
