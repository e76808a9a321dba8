#pragma once

#include <optional>

namespace lossav::bargain {

// Inputs to the Nash bargaining extension: worker bargaining power beta,
// loss aversion lambda, and a known (eps, phi) pair.
struct BargainInput {
  double beta;
  double lambda;
  double eps;
  double phi;

  BargainInput(double beta, double lambda, double eps, double phi);
};

enum class Region { a_plus, a_minus, a_plus_minus, outside };

enum class BargainStatus { no_bargain, pay_cut, salary_match, pay_raise };

struct BargainOutcome {
  BargainStatus status;
  std::optional<double> r;  // absent iff no_bargain
};

// Classifies (eps, phi) into the successful-bargain sets:
//   a_plus       eps <= 0, phi > 0, phi > -eps          (pay raise)
//   a_minus      eps > 0,  phi <= 0, phi > -eps/lambda  (pay cut)
//   a_plus_minus eps > 0,  phi > 0,  phi > -eps/lambda  (raise or cut)
// Boundary phi == -eps/lambda (or -eps) counts as outside.
Region bargain_region(const BargainInput& inp);

// Closed-form Nash solution. Pay cut r = beta phi - (1-beta) eps / lambda
// below phi < (1-beta) eps / (beta lambda); salary match r = 0 on the closed
// interval up to (1-beta) eps / beta; pay raise r = beta phi - (1-beta) eps
// above it. Ties at the thresholds classify as salary match.
BargainOutcome nash_wage(const BargainInput& inp);

// d r / d lambda of the bargained wage: (1-beta) eps / lambda^2 for pay
// cuts, 0 for pay raises. Undefined (throws) for salary match or
// no-bargain inputs.
double dcut_dlambda(const BargainInput& inp);

// Joint Nash payoff (lambda^{1{r<0}} r + eps)^beta (phi - r)^(1-beta);
// exposed so tests can brute-force the argmax.
double joint_payoff(const BargainInput& inp, double r);

}  // namespace lossav::bargain
