#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lossav/bins.hpp"

namespace lossav::io {

// Doubles formatted with 17 significant digits so values round-trip exactly
// through the emitted CSV/JSON artifacts.
std::string format_double(double v);

// Raw growth observations: CSV with a `growth` column. Lines starting with
// '#' are comments; malformed rows raise with their line number.
std::vector<double> read_growth_csv(const std::filesystem::path& path);

// Pre-binned data: CSV with `bin_mid,prop[,count]` columns. Returns
// proportions aligned to the grid; counts (when present) define n_obs.
// Rows whose bin_mid falls outside the grid are rejected.
BinnedDistribution read_binned_csv(const std::filesystem::path& path,
                                   const BinGrid& grid);

// True when the file looks pre-binned (header has a bin_mid column).
bool is_binned_csv(const std::filesystem::path& path);

struct CsvWriter {
  explicit CsvWriter(const std::filesystem::path& path,
                     const std::string& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);

 private:
  void* file_;
};

}  // namespace lossav::io
