#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lossav {

// Uniform salary-growth bins addressed by their centers. Centers run from
// `lo` to `hi` in steps of `width`; bin i covers [center - width/2,
// center + width/2), the topmost bin closed on the right. One bin is always
// centered at exactly 0; `include_zero_bin` controls whether it is part of
// the distribution or skipped (proportions then exclude it but denominators
// still count every observation).
struct BinGrid {
  double lo;
  double hi;
  double width;
  bool include_zero_bin;

  BinGrid(double lo, double hi, double width, bool include_zero_bin);

  int n_centers() const { return n_centers_; }
  // Centers are anchored at the zero bin so center(zero_index()) is exactly
  // 0.0 regardless of rounding in lo.
  double center(int i) const { return (i - zero_index_) * width; }
  int zero_index() const { return zero_index_; }  // index among all centers

  // Included centers (zero bin dropped when excluded), in ascending order.
  std::vector<double> centers() const;
  int included_count() const;

  // Index into the included sequence for a raw growth value, or -1 when the
  // value falls outside the grid or into an excluded zero bin.
  int included_index(double r) const;

  bool operator==(const BinGrid& other) const;

 private:
  int n_centers_ = 0;
  int zero_index_ = 0;
};

// Proportions aligned to BinGrid::centers(). Proportions are relative to all
// observations (n_obs), so out-of-range and excluded-zero-bin mass keeps the
// sum below one. n_obs is absent for analytic predictions.
struct BinnedDistribution {
  BinGrid grid;
  std::vector<double> props;
  std::optional<std::int64_t> n_obs;
};

// Bin raw growth observations. Every input value counts toward n_obs; values
// outside the grid (or in an excluded zero bin) contribute to the
// denominator only.
BinnedDistribution bin_growth(std::span<const double> growth, const BinGrid& grid);

// As above but returning raw counts per included bin.
std::vector<std::int64_t> bin_counts(std::span<const double> growth,
                                     const BinGrid& grid);

}  // namespace lossav
