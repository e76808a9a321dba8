#include "lossav/bargain.hpp"

#include <cmath>
#include <stdexcept>

namespace lossav::bargain {

BargainInput::BargainInput(double beta_, double lambda_, double eps_, double phi_)
    : beta(beta_), lambda(lambda_), eps(eps_), phi(phi_) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("BargainInput: beta must be in (0, 1)");
  }
  if (!std::isfinite(lambda) || lambda < 1.0) {
    throw std::invalid_argument("BargainInput: lambda must be >= 1");
  }
  if (!std::isfinite(eps) || !std::isfinite(phi)) {
    throw std::invalid_argument("BargainInput: non-finite eps or phi");
  }
}

Region bargain_region(const BargainInput& inp) {
  if (inp.eps <= 0.0) {
    if (inp.phi > 0.0 && inp.phi > -inp.eps) return Region::a_plus;
    return Region::outside;
  }
  if (inp.phi <= -inp.eps / inp.lambda) return Region::outside;
  return inp.phi > 0.0 ? Region::a_plus_minus : Region::a_minus;
}

BargainOutcome nash_wage(const BargainInput& inp) {
  if (bargain_region(inp) == Region::outside) {
    return {BargainStatus::no_bargain, std::nullopt};
  }
  const double share = (1.0 - inp.beta) / inp.beta;
  const double cut_threshold = share * inp.eps / inp.lambda;
  const double raise_threshold = share * inp.eps;
  if (inp.phi < cut_threshold) {
    return {BargainStatus::pay_cut,
            inp.beta * inp.phi - (1.0 - inp.beta) * inp.eps / inp.lambda};
  }
  if (inp.phi > raise_threshold) {
    return {BargainStatus::pay_raise,
            inp.beta * inp.phi - (1.0 - inp.beta) * inp.eps};
  }
  return {BargainStatus::salary_match, 0.0};
}

double dcut_dlambda(const BargainInput& inp) {
  const auto outcome = nash_wage(inp);
  switch (outcome.status) {
    case BargainStatus::pay_cut:
      return (1.0 - inp.beta) * inp.eps / (inp.lambda * inp.lambda);
    case BargainStatus::pay_raise:
      return 0.0;
    default:
      throw std::invalid_argument(
          "dcut_dlambda: derivative defined only for pay cuts and pay raises");
  }
}

double joint_payoff(const BargainInput& inp, double r) {
  const double worker = (r < 0.0 ? inp.lambda * r : r) + inp.eps;
  const double firm = inp.phi - r;
  if (worker <= 0.0 || firm <= 0.0) return 0.0;
  return std::pow(worker, inp.beta) * std::pow(firm, 1.0 - inp.beta);
}

}  // namespace lossav::bargain
