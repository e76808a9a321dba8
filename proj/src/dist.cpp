#include "lossav/dist.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lossav/common.hpp"
#include "lossav/numerics.hpp"

namespace lossav {

namespace {

constexpr double kTailClamp = 40.0;  // scales from location
constexpr double kSqrt2Pi = 2.5066282746310005;

void check_finite(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("dist: non-finite argument");
  }
}

}  // namespace

HetFamily::HetFamily(Family kind_, double location_, double scale_)
    : kind(kind_), location(location_), scale(scale_) {
  if (!std::isfinite(location) || !std::isfinite(scale) || scale <= 0.0) {
    throw std::invalid_argument("HetFamily: scale must be finite and > 0");
  }
}

double pdf(const HetFamily& f, double x) {
  check_finite(x);
  const double z = (x - f.location) / f.scale;
  if (f.kind == Family::logistic) {
    const double e = std::exp(-std::abs(z));
    const double denom = 1.0 + e;
    return e / (f.scale * denom * denom);
  }
  return std::exp(-0.5 * z * z) / (f.scale * kSqrt2Pi);
}

double cdf(const HetFamily& f, double x) {
  check_finite(x);
  const double z = (x - f.location) / f.scale;
  if (z <= -kTailClamp) return 0.0;
  if (z >= kTailClamp) return 1.0;
  if (f.kind == Family::logistic) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  return num::normal_cdf(z);
}

double quantile(const HetFamily& f, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("quantile: p must be in (0, 1)");
  }
  if (f.kind == Family::logistic) {
    return f.location + f.scale * (std::log(p) - std::log1p(-p));
  }
  return f.location + f.scale * num::normal_quantile(p);
}

double mills(const HetFamily& f, double x) {
  check_finite(x);
  const double z = (x - f.location) / f.scale;
  if (std::abs(z) > kTailClamp) {
    throw NumericalError("mills: tail regime at x = " + std::to_string(x) +
                         " (" + std::to_string(z) + " scales from location)");
  }
  double value;
  if (f.kind == Family::logistic) {
    // (1 - F)/f = s (1 + exp(-z))
    value = f.scale * (1.0 + std::exp(-z));
  } else {
    // (1 - Phi(z))/phi(z) = sqrt(pi/2) erfcx(z / sqrt 2), scaled by s
    value = f.scale * std::sqrt(M_PI / 2.0) * num::erfcx(z * M_SQRT1_2);
  }
  if (!std::isfinite(value) || value <= 0.0) {
    throw NumericalError("mills: ratio not finite at x = " + std::to_string(x));
  }
  return value;
}

double mills_deriv(const HetFamily& f, double x) {
  check_finite(x);
  const double z = (x - f.location) / f.scale;
  if (f.kind == Family::logistic) {
    return -std::exp(-z);
  }
  // m'(x) = z R(z) - 1 with R the standardized ratio; dimensionless.
  const double r = std::sqrt(M_PI / 2.0) * num::erfcx(z * M_SQRT1_2);
  return z * r - 1.0;
}

}  // namespace lossav
