#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lossav/binprob.hpp"
#include "lossav/common.hpp"
#include "lossav/simulate.hpp"

using namespace lossav;
using namespace lossav::sim;

namespace {

ModelParams params(double lambda) {
  return ModelParams(lambda, HetFamily(Family::logistic, 1.2, 0.5),
                     HetFamily(Family::logistic, 0.0, 0.611));
}

}  // namespace

TEST_CASE("fixed seed gives bit-identical output") {
  SimConfig cfg(params(1.123), 20000, 42);
  const auto a = simulate(cfg);
  const auto b = simulate(cfg);
  REQUIRE(a.offers.size() == b.offers.size());
  for (std::size_t i = 0; i < a.offers.size(); ++i) {
    CHECK(a.offers[i].phi == b.offers[i].phi);
    CHECK(a.offers[i].eps == b.offers[i].eps);
    CHECK(a.offers[i].offer == b.offers[i].offer);
    CHECK(a.offers[i].accepted == b.offers[i].accepted);
  }
  CHECK(a.realized == b.realized);
}

TEST_CASE("output independent of thread count") {
  SimConfig one(params(1.5), 30000, 7);
  one.threads = 1;
  SimConfig eight = one;
  eight.threads = 8;
  const auto a = simulate(one);
  const auto b = simulate(eight);
  CHECK(a.realized == b.realized);
  CHECK(a.n_accepted == b.n_accepted);
  const BinGrid grid(-0.2, 0.2, 0.002, true);
  const auto ba = simulate_binned(one, grid);
  const auto bb = simulate_binned(eight, grid);
  CHECK(ba.realized.props == bb.realized.props);
}

TEST_CASE("records satisfy the model invariants") {
  SimConfig cfg(params(1.123), 5000, 11);
  const auto out = simulate(cfg);
  CHECK(out.n_offers == 5000);
  CHECK(static_cast<std::int64_t>(out.offers.size()) == 5000);
  for (const auto& rec : out.offers) {
    CHECK(rec.offer == optimal_offer(cfg.params, rec.phi));
    CHECK(rec.accepted == (utility(cfg.params, rec.offer, rec.eps) > 0.0));
  }
  // maximized profit is never negative under the wage-offer FOC
  CHECK(out.n_negative_profit == 0);
  // record_rejected = false keeps accepted offers only
  SimConfig lean = cfg;
  lean.record_rejected = false;
  const auto lean_out = simulate(lean);
  CHECK(static_cast<std::int64_t>(lean_out.offers.size()) ==
        lean_out.n_accepted);
  CHECK(lean_out.realized == out.realized);
}

TEST_CASE("acceptance share matches accepted_mass") {
  const auto p = params(1.123);
  SimConfig cfg(p, 1000000, 3);
  cfg.threads = 4;
  const BinGrid grid(-0.2, 0.2, 0.002, true);
  const auto out = simulate_binned(cfg, grid);
  const double a = binprob::accepted_mass(p);
  const double share = static_cast<double>(out.n_accepted) / out.n_offers;
  const double se = std::sqrt(a * (1.0 - a) / out.n_offers);
  CHECK(std::abs(share - a) < 3.0 * se);
}

TEST_CASE("censoring removes more cuts than raises") {
  SimConfig cfg(params(1.5), 200000, 5);
  cfg.threads = 4;
  const auto out = simulate(cfg);
  std::int64_t offers_below = 0, accepted_below = 0;
  for (const auto& rec : out.offers) {
    if (rec.offer < 0.0) {
      ++offers_below;
      if (rec.accepted) ++accepted_below;
    }
  }
  const double share_all =
      static_cast<double>(offers_below) / out.n_offers;
  const double share_realized =
      static_cast<double>(accepted_below) / out.n_accepted;
  CHECK(share_realized < share_all);
}

TEST_CASE("zero-bin share without loss aversion stays at the smooth level") {
  SimConfig cfg(params(1.0), 1000000, 13);
  cfg.threads = 4;
  const BinGrid grid(-0.2, 0.2, 0.002, true);
  const auto out = simulate_binned(cfg, grid);
  const int z = grid.zero_index();
  const double zero_share = out.realized.props[z];
  const double neighbors = 0.5 * (out.realized.props[z - 1] +
                                  out.realized.props[z + 1]);
  CHECK(zero_share == doctest::Approx(neighbors).epsilon(0.15));
}

TEST_CASE("placebo with independent draws") {
  const BinGrid grid(-0.5, 0.5, 0.002, true);
  // degenerate identical constants: all mass in the zero bin
  const std::vector<double> c{3.5, 3.5, 3.5};
  const auto all_zero = placebo_independent(c, c, grid, 2000, 1);
  CHECK(all_zero.props[grid.zero_index()] == doctest::Approx(1.0));
  // disjoint supports: zero-bin mass ~ 0
  const std::vector<double> prev{3.10, 3.20, 3.30};
  const std::vector<double> next{3.15, 3.25, 3.35};
  const auto disjoint = placebo_independent(prev, next, grid, 5000, 2);
  CHECK(disjoint.props[grid.zero_index()] == 0.0);
  CHECK_THROWS_AS(placebo_independent({}, next, grid, 10, 3),
                  std::invalid_argument);
}

TEST_CASE("placebo zero-bin share equals the collision probability") {
  // mass-pointed marginals on a coarse grid; collision prob = sum p_i q_i
  const BinGrid grid(-1.0, 1.0, 0.002, true);
  std::vector<double> prev, next;
  const double values[4] = {3.0, 3.1, 3.2, 3.3};
  const int prev_counts[4] = {4, 3, 2, 1};
  const int next_counts[4] = {1, 1, 3, 5};
  for (int v = 0; v < 4; ++v) {
    for (int i = 0; i < prev_counts[v]; ++i) prev.push_back(values[v]);
    for (int i = 0; i < next_counts[v]; ++i) next.push_back(values[v]);
  }
  double collision = 0.0;
  for (int v = 0; v < 4; ++v) {
    collision += (prev_counts[v] / 10.0) * (next_counts[v] / 10.0);
  }
  const std::int64_t n = 400000;
  const auto d = placebo_independent(prev, next, grid, n, 4);
  const double se = std::sqrt(collision * (1.0 - collision) / n);
  CHECK(std::abs(d.props[grid.zero_index()] - collision) < 4.0 * se);
}

TEST_CASE("conditional placebo: uniform density reduces to independent") {
  const BinGrid grid(-1.0, 1.0, 0.002, true);
  std::vector<double> prev, next;
  for (int i = 0; i < 6; ++i) prev.push_back(3.0 + 0.05 * i);
  for (int i = 0; i < 6; ++i) next.push_back(3.0 + 0.05 * i);
  const std::int64_t n = 300000;
  const auto indep = placebo_independent(prev, next, grid, n, 5);
  const auto cond = placebo_conditional(
      prev, next, [](double) { return 1.0; }, grid, n, 6);
  // same distribution up to Monte Carlo noise
  const int z = grid.zero_index();
  const double se = std::sqrt(indep.props[z] / n) * 2.0;
  CHECK(std::abs(indep.props[z] - cond.props[z]) < 5.0 * se + 1e-3);
}

TEST_CASE("conditional placebo concentrates more mass at zero") {
  // centering the new-salary distribution on the previous salary makes
  // exact collisions more likely than independent resampling
  const BinGrid grid(-1.0, 1.0, 0.002, true);
  std::vector<double> prev, next;
  for (int i = 0; i < 21; ++i) prev.push_back(3.0 + 0.05 * i);
  for (int i = 0; i < 21; ++i) next.push_back(3.0 + 0.05 * i);
  const std::int64_t n = 200000;
  const auto indep = placebo_independent(prev, next, grid, n, 7);
  const auto cond = placebo_conditional(
      prev, next,
      [](double g) { return std::exp(-std::abs(g) / 0.05); }, grid, n, 8);
  CHECK(cond.props[grid.zero_index()] > indep.props[grid.zero_index()]);
}

TEST_CASE("conditional placebo degenerate support") {
  const BinGrid grid(-1.0, 1.0, 0.002, true);
  const std::vector<double> prev{3.0};
  const std::vector<double> next{3.1};
  const auto d = placebo_conditional(
      prev, next, [](double) { return 1.0; }, grid, 1000, 9);
  CHECK(d.props[grid.included_index(0.1)] == doctest::Approx(1.0));
  // all weights zero -> error naming the previous salary
  CHECK_THROWS_AS(placebo_conditional(prev, next, [](double) { return 0.0; },
                                      grid, 10, 10),
                  NumericalError);
}
