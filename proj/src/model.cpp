#include "lossav/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lossav/common.hpp"
#include "lossav/numerics.hpp"

namespace lossav {

ModelParams::ModelParams(double lambda_, HetFamily phi_, HetFamily eps_)
    : lambda(lambda_), phi(phi_), eps(eps_) {
  if (!std::isfinite(lambda) || lambda < 1.0) {
    throw std::invalid_argument("ModelParams: lambda must be >= 1");
  }
}

namespace {

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string("model: non-finite ") + what);
  }
}

// lambda^{1{r<0}} * r, the kinked utility term.
inline double kink_term(const ModelParams& p, double r) {
  return r < 0.0 ? p.lambda * r : r;
}

}  // namespace

double utility(const ModelParams& p, double r, double eps_draw) {
  check_finite(r, "offer r");
  check_finite(eps_draw, "eps draw");
  return kink_term(p, r) + eps_draw;
}

double acceptance_rate(const ModelParams& p, double r) {
  check_finite(r, "offer r");
  return 1.0 - cdf(p.eps, -kink_term(p, r));
}

double acceptance_slope(const ModelParams& p, double r, Side side) {
  check_finite(r, "offer r");
  const bool cut_side = r < 0.0 || (r == 0.0 && side == Side::left);
  if (cut_side) {
    return p.lambda * pdf(p.eps, -p.lambda * r);
  }
  return pdf(p.eps, -r);
}

double expected_profit(const ModelParams& p, double phi, double r) {
  check_finite(phi, "phi");
  return acceptance_rate(p, r) * (phi - r);
}

double marginal_profit(const ModelParams& p, double phi, double r, Side side) {
  check_finite(phi, "phi");
  return -acceptance_rate(p, r) + acceptance_slope(p, r, side) * (phi - r);
}

Wedge salary_match_wedge(const ModelParams& p) {
  const double m0 = mills(p.eps, 0.0);
  return Wedge{m0 / p.lambda, m0};
}

namespace detail {

double phi_cut(const ModelParams& p, double r) {
  return r + mills(p.eps, -p.lambda * r) / p.lambda;
}

double phi_raise(const ModelParams& p, double r) {
  return r + mills(p.eps, -r);
}

double phi_cut_deriv(const ModelParams& p, double r) {
  return 1.0 - mills_deriv(p.eps, -p.lambda * r);
}

double phi_raise_deriv(const ModelParams& p, double r) {
  return 1.0 - mills_deriv(p.eps, -r);
}

}  // namespace detail

double implied_phi(const ModelParams& p, double r) {
  check_finite(r, "offer r");
  if (r == 0.0) {
    throw std::invalid_argument(
        "implied_phi: r = 0 maps to the whole wedge; use salary_match_wedge");
  }
  return r < 0.0 ? detail::phi_cut(p, r) : detail::phi_raise(p, r);
}

double optimal_offer(const ModelParams& p, double phi) {
  check_finite(phi, "phi");
  const Wedge w = salary_match_wedge(p);
  if (phi >= w.lo && phi <= w.hi) return 0.0;
  constexpr double kTol = 1e-10;
  try {
    if (phi > w.hi) {
      // phi_raise is increasing with phi_raise(0) = w.hi < phi and
      // phi_raise(phi) = phi + mills(-phi) > phi, so (0, phi] brackets the
      // root.
      return num::brent(
          [&](double r) { return detail::phi_raise(p, r) - phi; }, 0.0, phi,
          kTol);
    }
    // Pay cut: on r < 0 the mills term lies in (0, mills(0)], so the root
    // sits in [phi - w.lo, 0).
    const double lo = phi - w.lo;
    return num::brent([&](double r) { return detail::phi_cut(p, r) - phi; },
                      lo, 0.0, kTol);
  } catch (const NumericalError& e) {
    throw NumericalError("optimal_offer: root search failed for phi = " +
                         std::to_string(phi) + " (bracket side " +
                         (phi > w.hi ? "raise" : "cut") + "): " + e.what());
  }
}

}  // namespace lossav
