#pragma once

namespace lossav {

enum class Family { logistic, normal };

// Two-parameter location-scale family for unobserved heterogeneity. The
// logistic is the primary choice; the normal is the alternative. `scale` is
// the family's own scale parameter: the logistic scale s (variance
// s^2 pi^2 / 3) or the normal standard deviation.
struct HetFamily {
  Family kind;
  double location;
  double scale;

  HetFamily(Family kind, double location, double scale);
};

double pdf(const HetFamily& f, double x);

// CDF with hard tail clamping: beyond 40 scales from the location it returns
// exactly 0 or 1.
double cdf(const HetFamily& f, double x);

// Inverse CDF, p in (0, 1). Closed form for the logistic; rational
// approximation plus Newton refinement for the normal.
double quantile(const HetFamily& f, double p);

// Survival-to-density ratio (1 - F(x)) / f(x), the "inverse Mills ratio" as
// it enters the wage-offer first-order conditions. Strictly positive and
// strictly decreasing in x for both families, which is what makes
// x -> mills(-x) increasing and the offer FOC uniquely solvable. Raises
// NumericalError beyond 40 scales (or wherever the ratio is not finite)
// instead of returning an overflowed value.
double mills(const HetFamily& f, double x);

// d mills / dx; negative everywhere.
double mills_deriv(const HetFamily& f, double x);

}  // namespace lossav
