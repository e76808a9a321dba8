#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lossav/bargain.hpp"
#include "lossav/rng.hpp"

using namespace lossav;
using namespace lossav::bargain;

namespace {

// Dense grid argmax of the joint payoff over the interval where both sides
// have positive surplus.
double grid_nash(const BargainInput& inp, double spacing = 1e-4) {
  const double lo = -inp.eps / inp.lambda + spacing;
  const double hi = inp.phi - spacing;
  double best_r = lo, best = -1.0;
  for (double r = std::min(lo, -1.0); r <= std::max(hi, 1.0); r += spacing) {
    const double v = joint_payoff(inp, r);
    if (v > best) {
      best = v;
      best_r = r;
    }
  }
  return best_r;
}

}  // namespace

TEST_CASE("input validation") {
  CHECK_THROWS_AS(BargainInput(0.0, 1.2, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(BargainInput(1.0, 1.2, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(BargainInput(0.5, 0.8, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("region classification") {
  CHECK(bargain_region({0.5, 1.5, -0.1, 0.2}) == Region::a_plus);
  CHECK(bargain_region({0.5, 2.0, 0.2, -0.05}) == Region::a_minus);
  CHECK(bargain_region({0.5, 1.0, 0.2, -0.05}) == Region::a_minus);
  CHECK(bargain_region({0.5, 1.0, 0.2, 0.05}) == Region::a_plus_minus);
  CHECK(bargain_region({0.5, 1.5, -0.1, 0.05}) == Region::outside);
  CHECK(bargain_region({0.5, 2.0, 0.2, -0.2}) == Region::outside);
  // boundary phi = -eps/lambda counts as outside
  CHECK(bargain_region({0.5, 2.0, 0.2, -0.1}) == Region::outside);
}

TEST_CASE("nash closed form: worked example") {
  // beta=0.5, lambda=2, eps=0.2: thresholds [0.1, 0.2]
  const auto match = nash_wage({0.5, 2.0, 0.2, 0.15});
  CHECK(match.status == BargainStatus::salary_match);
  CHECK(match.r.value() == 0.0);
  const auto cut = nash_wage({0.5, 2.0, 0.2, 0.05});
  CHECK(cut.status == BargainStatus::pay_cut);
  CHECK(cut.r.value() == doctest::Approx(-0.025).epsilon(1e-12));
  const auto raise = nash_wage({0.5, 2.0, 0.2, 0.4});
  CHECK(raise.status == BargainStatus::pay_raise);
  CHECK(raise.r.value() == doctest::Approx(0.1).epsilon(1e-12));
  const auto none = nash_wage({0.5, 2.0, 0.2, -0.2});
  CHECK(none.status == BargainStatus::no_bargain);
  CHECK(!none.r.has_value());
}

TEST_CASE("lambda one collapses the match interval") {
  // both thresholds equal (1-beta) eps / beta; solution continuous in phi
  const double beta = 0.4, eps = 0.3;
  const double t = (1.0 - beta) / beta * eps;
  const auto below = nash_wage({beta, 1.0, eps, t - 1e-9});
  const auto above = nash_wage({beta, 1.0, eps, t + 1e-9});
  CHECK(below.r.value() == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(above.r.value() == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("nash equals grid argmax of the joint payoff") {
  CHECK(std::abs(grid_nash({0.5, 2.0, 0.2, 0.15})) < 2e-4);
  CHECK(std::abs(grid_nash({0.5, 2.0, 0.2, 0.05}) - (-0.025)) < 2e-4);
  RngStream rng(77, 0);
  int checked = 0;
  while (checked < 60) {
    const double beta = 0.15 + 0.7 * rng.next_double();
    const double lambda = 1.0 + 1.2 * rng.next_double();
    const double eps = -0.4 + 0.9 * rng.next_double();
    const double phi = -0.4 + 1.2 * rng.next_double();
    BargainInput inp(beta, lambda, eps, phi);
    if (bargain_region(inp) == Region::outside) continue;
    ++checked;
    const auto sol = nash_wage(inp);
    CHECK(std::abs(grid_nash(inp) - sol.r.value()) < 2e-4);
  }
}

TEST_CASE("participation holds at the bargained wage") {
  RngStream rng(78, 0);
  int checked = 0;
  while (checked < 300) {
    const double beta = 0.1 + 0.8 * rng.next_double();
    const double lambda = 1.0 + 1.5 * rng.next_double();
    const double eps = -0.5 + 1.2 * rng.next_double();
    const double phi = -0.5 + 1.5 * rng.next_double();
    BargainInput inp(beta, lambda, eps, phi);
    if (bargain_region(inp) == Region::outside) continue;
    ++checked;
    const double r = nash_wage(inp).r.value();
    const double worker = (r < 0 ? lambda * r : r) + eps;
    const double firm = phi - r;
    CHECK(worker > 0.0);
    CHECK(firm > 0.0);
  }
}

TEST_CASE("higher loss aversion shrinks the pay-cut region") {
  RngStream rng(79, 0);
  for (int i = 0; i < 500; ++i) {
    const double eps = 1e-3 + 0.8 * rng.next_double();
    const double phi = -0.8 * rng.next_double();
    const BargainInput lo_inp(0.5, 1.1, eps, phi);
    const BargainInput hi_inp(0.5, 1.9, eps, phi);
    if (bargain_region(hi_inp) == Region::a_minus) {
      CHECK(bargain_region(lo_inp) == Region::a_minus);
    }
  }
}

TEST_CASE("dcut_dlambda") {
  CHECK(dcut_dlambda({0.5, 2.0, 0.2, 0.4}) == 0.0);  // pay raise unaffected
  CHECK(dcut_dlambda({0.5, 2.0, 0.2, 0.05}) ==
        doctest::Approx(0.025).epsilon(1e-12));
  // matches the finite difference of the closed form in lambda
  const double h = 1e-5;
  const double r_up = nash_wage({0.5, 2.0 + h, 0.2, 0.05}).r.value();
  const double r_dn = nash_wage({0.5, 2.0 - h, 0.2, 0.05}).r.value();
  CHECK(dcut_dlambda({0.5, 2.0, 0.2, 0.05}) ==
        doctest::Approx((r_up - r_dn) / (2.0 * h)).epsilon(1e-6));
  // eps = 0 boundary: derivative is zero and the formula is linear in eps
  CHECK(dcut_dlambda({0.5, 2.0, 1e-12, -1e-13}) ==
        doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(dcut_dlambda({0.5, 2.0, 0.2, 0.15}), std::invalid_argument);
  CHECK_THROWS_AS(dcut_dlambda({0.5, 2.0, 0.2, -0.5}), std::invalid_argument);
}
