#include "lossav/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lossav/common.hpp"

namespace lossav::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(path + ":" + std::to_string(line) +
                                ": cannot parse number '" + s + "'");
  }
}

struct Header {
  std::vector<std::string> columns;
  int line_no = 0;
};

Header read_header(std::ifstream& in, const std::string& path, int& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    Header h;
    for (auto& c : split_csv(t)) h.columns.push_back(trim(c));
    h.line_no = line_no;
    return h;
  }
  throw std::invalid_argument(path + ": empty file (no header row)");
}

int column_index(const Header& h, const std::string& name) {
  for (std::size_t i = 0; i < h.columns.size(); ++i) {
    if (h.columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::vector<double> read_growth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  int line_no = 0;
  const Header header = read_header(in, path.string(), line_no);
  const int col = column_index(header, "growth");
  if (col < 0) {
    throw std::invalid_argument(path.string() + ": no 'growth' column");
  }
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_csv(t);
    if (static_cast<int>(fields.size()) <= col) {
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(line_no) + ": missing field");
    }
    out.push_back(parse_double(trim(fields[col]), path.string(), line_no));
  }
  return out;
}

bool is_binned_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  int line_no = 0;
  const Header header = read_header(in, path.string(), line_no);
  return column_index(header, "bin_mid") >= 0;
}

BinnedDistribution read_binned_csv(const std::filesystem::path& path,
                                   const BinGrid& grid) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  int line_no = 0;
  const Header header = read_header(in, path.string(), line_no);
  const int mid_col = column_index(header, "bin_mid");
  const int prop_col = column_index(header, "prop");
  const int count_col = column_index(header, "count");
  if (mid_col < 0 || prop_col < 0) {
    throw std::invalid_argument(path.string() +
                                ": need 'bin_mid' and 'prop' columns");
  }
  BinnedDistribution out{grid, std::vector<double>(grid.included_count(), 0.0),
                         std::nullopt};
  double total_count = 0.0;
  bool have_counts = count_col >= 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_csv(t);
    const int needed = std::max(mid_col, std::max(prop_col, have_counts ? count_col : 0));
    if (static_cast<int>(fields.size()) <= needed) {
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(line_no) + ": missing field");
    }
    const double mid = parse_double(trim(fields[mid_col]), path.string(), line_no);
    const double prop = parse_double(trim(fields[prop_col]), path.string(), line_no);
    const int idx = grid.included_index(mid);
    if (idx < 0) {
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(line_no) + ": bin_mid " +
                                  format_double(mid) + " outside the grid");
    }
    out.props[idx] = prop;
    if (have_counts) {
      total_count +=
          parse_double(trim(fields[count_col]), path.string(), line_no);
    }
  }
  if (have_counts && total_count > 0.0) {
    // Counts cover the in-grid bins; recover the full sample size from the
    // proportion mass they represent.
    double prop_mass = 0.0;
    for (double v : out.props) prop_mass += v;
    if (prop_mass > 0.0) {
      out.n_obs = static_cast<std::int64_t>(std::llround(total_count / prop_mass));
    }
  }
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::string& header) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw std::invalid_argument("cannot write " + path.string());
  file_ = f;
  std::fprintf(f, "# format_version %s\n%s\n", kFormatVersion, header.c_str());
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(static_cast<std::FILE*>(file_));
}

void CsvWriter::row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += format_double(values[i]);
  }
  line += '\n';
  std::fputs(line.c_str(), static_cast<std::FILE*>(file_));
}

void CsvWriter::raw_row(const std::string& line) {
  std::fputs((line + "\n").c_str(), static_cast<std::FILE*>(file_));
}

}  // namespace lossav::io
