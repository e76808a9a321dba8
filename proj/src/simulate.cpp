#include "lossav/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>

#include "lossav/common.hpp"
#include "lossav/numerics.hpp"
#include "lossav/rng.hpp"

namespace lossav::sim {

SimConfig::SimConfig(ModelParams params_, std::int64_t n_jobseekers_,
                     std::uint64_t seed_)
    : params(std::move(params_)), n_jobseekers(n_jobseekers_), seed(seed_) {
  if (n_jobseekers <= 0) {
    throw std::invalid_argument("SimConfig: n_jobseekers must be > 0");
  }
}

namespace {

struct Draw {
  double phi;
  double eps;
  double offer;
  bool accepted;
};

// One job seeker: substream = index, one Philox block yields both uniforms.
inline Draw draw_one(const ModelParams& p, std::uint64_t seed,
                     std::int64_t index) {
  RngStream rng(seed, static_cast<std::uint64_t>(index));
  const double u_phi = rng.next_double();
  const double u_eps = rng.next_double();
  Draw d;
  d.phi = quantile(p.phi, u_phi);
  d.eps = quantile(p.eps, u_eps);
  d.offer = optimal_offer(p, d.phi);
  d.accepted = utility(p, d.offer, d.eps) > 0.0;
  return d;
}

}  // namespace

SimOutput simulate(const SimConfig& cfg) {
  const std::int64_t n = cfg.n_jobseekers;
  std::vector<Draw> draws(n);
  num::parallel_for(n, cfg.threads, [&](std::int64_t i) {
    draws[i] = draw_one(cfg.params, cfg.seed, i);
  });
  SimOutput out;
  out.n_offers = n;
  out.offers.reserve(cfg.record_rejected ? n : 0);
  for (const Draw& d : draws) {
    if (d.accepted) {
      ++out.n_accepted;
      out.realized.push_back(d.offer);
    }
    if (expected_profit(cfg.params, d.phi, d.offer) < 0.0) {
      ++out.n_negative_profit;
    }
    if (cfg.record_rejected || d.accepted) {
      out.offers.push_back({d.phi, d.eps, d.offer, d.accepted});
    }
  }
  return out;
}

BinnedSim simulate_binned(const SimConfig& cfg, const BinGrid& grid) {
  const std::int64_t n = cfg.n_jobseekers;
  const int workers = std::max(1, cfg.threads);
  const std::int64_t chunk = (n + workers - 1) / workers;
  const int n_chunks = static_cast<int>((n + chunk - 1) / chunk);
  std::vector<std::vector<std::int64_t>> counts(
      n_chunks, std::vector<std::int64_t>(grid.included_count(), 0));
  std::vector<std::int64_t> accepted(n_chunks, 0);
  num::parallel_for(n_chunks, cfg.threads, [&](std::int64_t c) {
    const std::int64_t lo = c * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    auto& local = counts[c];
    for (std::int64_t i = lo; i < hi; ++i) {
      const Draw d = draw_one(cfg.params, cfg.seed, i);
      if (!d.accepted) continue;
      ++accepted[c];
      const int idx = grid.included_index(d.offer);
      if (idx >= 0) ++local[idx];
    }
  });
  std::int64_t n_accepted = 0;
  for (int c = 0; c < n_chunks; ++c) n_accepted += accepted[c];
  std::vector<double> props(grid.included_count(), 0.0);
  if (n_accepted > 0) {
    for (std::size_t b = 0; b < props.size(); ++b) {
      std::int64_t total = 0;
      for (int c = 0; c < n_chunks; ++c) total += counts[c][b];
      props[b] = static_cast<double>(total) / static_cast<double>(n_accepted);
    }
  }
  return BinnedSim{BinnedDistribution{grid, std::move(props), n_accepted}, n,
                   n_accepted};
}

BinnedDistribution placebo_independent(std::span<const double> prev_log_salaries,
                                       std::span<const double> new_log_salaries,
                                       const BinGrid& grid, std::int64_t n,
                                       std::uint64_t seed) {
  if (prev_log_salaries.empty() || new_log_salaries.empty()) {
    throw std::invalid_argument("placebo_independent: empty salary sample");
  }
  if (n <= 0) throw std::invalid_argument("placebo_independent: n must be > 0");
  std::vector<double> growth(n);
  const double np = static_cast<double>(prev_log_salaries.size());
  const double nn = static_cast<double>(new_log_salaries.size());
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    const auto prev =
        prev_log_salaries[static_cast<std::size_t>(rng.next_double() * np)];
    const auto next =
        new_log_salaries[static_cast<std::size_t>(rng.next_double() * nn)];
    growth[i] = next - prev;
  }
  return bin_growth(growth, grid);
}

BinnedDistribution placebo_conditional(
    std::span<const double> prev_log_salaries,
    std::span<const double> new_log_salaries,
    const std::function<double(double)>& smooth_growth_density,
    const BinGrid& grid, std::int64_t n, std::uint64_t seed) {
  if (prev_log_salaries.empty() || new_log_salaries.empty()) {
    throw std::invalid_argument("placebo_conditional: empty salary sample");
  }
  if (n <= 0) throw std::invalid_argument("placebo_conditional: n must be > 0");
  // Weight tables are shared by identical previous salaries, which keeps the
  // cost at (#distinct prev values) x (new sample size).
  std::map<double, std::vector<double>> cumulative;
  auto table_for = [&](double w0) -> const std::vector<double>& {
    auto it = cumulative.find(w0);
    if (it != cumulative.end()) return it->second;
    std::vector<double> cum(new_log_salaries.size());
    double total = 0.0;
    for (std::size_t j = 0; j < new_log_salaries.size(); ++j) {
      const double weight = smooth_growth_density(new_log_salaries[j] - w0);
      if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw std::invalid_argument(
            "placebo_conditional: density returned an invalid weight");
      }
      total += weight;
      cum[j] = total;
    }
    if (total <= 0.0) {
      throw NumericalError(
          "placebo_conditional: all re-weighted probabilities are zero for "
          "previous salary " +
          std::to_string(w0));
    }
    for (double& v : cum) v /= total;
    return cumulative.emplace(w0, std::move(cum)).first->second;
  };
  const double np = static_cast<double>(prev_log_salaries.size());
  std::vector<double> growth(n);
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    const double w0 =
        prev_log_salaries[static_cast<std::size_t>(rng.next_double() * np)];
    const auto& cum = table_for(w0);
    const double u = rng.next_double();
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const std::size_t j = std::min<std::size_t>(
        static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    growth[i] = new_log_salaries[j] - w0;
  }
  return bin_growth(growth, grid);
}

}  // namespace lossav::sim
