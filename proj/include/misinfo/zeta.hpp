#pragma once

namespace misinfo {

// Hurwitz zeta  sum_{k>=0} (k + q)^(-s)  for s > 1, q > 0.
// Direct summation until the shifted argument reaches 16, then an
// Euler-Maclaurin tail with 13 Bernoulli corrections, evaluated in extended
// precision. Absolute error is below 1e-12 for s in (1.0001, 20] and q >= 1.
// Throws DomainError for s <= 1 or q <= 0.
double hurwitz_zeta(double s, double q);

// d/ds of hurwitz_zeta(s, q), same evaluation scheme.
double hurwitz_zeta_ds(double s, double q);

// Both at once; cheaper than two calls inside the likelihood search.
struct ZetaWithDerivative {
  double value;
  double ds;
};
ZetaWithDerivative hurwitz_zeta_with_ds(double s, double q);

}  // namespace misinfo
