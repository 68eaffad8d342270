#include "misinfo/zeta.hpp"

#include <array>
#include <cmath>
#include <string>

#include "misinfo/error.hpp"

namespace misinfo {
namespace {

// B_{2j} / (2j)!, j = 1..13
constexpr std::array<long double, 13> kBernoulliOverFactorial = {
    8.333333333333333333333333e-2L,  -1.388888888888888888888889e-3L, 3.306878306878306878306878e-5L,
    -8.267195767195767195767196e-7L, 2.087675698786809897921009e-8L,  -5.284190138687493184847682e-10L,
    1.338253653068467883282698e-11L, -3.389680296322582866830195e-13L, 8.586062056277844564135905e-15L,
    -2.174868698558061873041516e-16L, 5.509002828360229515202653e-18L, -1.395446468581252334070769e-19L,
    3.534707039629467471693230e-21L,
};

constexpr long double kShiftTarget = 16.0L;

void check_domain(double s, double q) {
  if (!(s > 1.0)) throw DomainError("hurwitz_zeta requires s > 1, got s = " + std::to_string(s));
  if (!(q > 0.0)) throw DomainError("hurwitz_zeta requires q > 0, got q = " + std::to_string(q));
}

template <bool kWithDerivative>
ZetaWithDerivative evaluate(double s_in, double q_in) {
  check_domain(s_in, q_in);
  const long double s = s_in;
  long double a = q_in;
  long double value = 0.0L;
  long double ds = 0.0L;
  while (a < kShiftTarget) {
    const long double term = std::pow(a, -s);
    value += term;
    if constexpr (kWithDerivative) ds -= std::log(a) * term;
    a += 1.0L;
  }

  // Tail  sum_{k>=0} (a + k)^(-s).
  const long double log_a = std::log(a);
  const long double a_pow = std::pow(a, -s);  // a^{-s}
  const long double integral = a * a_pow / (s - 1.0L);
  value += integral + 0.5L * a_pow;
  if constexpr (kWithDerivative) {
    ds += integral * (-log_a - 1.0L / (s - 1.0L));
    ds -= 0.5L * log_a * a_pow;
  }

  // T_j = c_j * s(s+1)...(s+2j-2) * a^{-s-2j+1}
  long double rising = s;            // s(s+1)...(s+2j-2)
  long double rising_log_ds = 1.0L / s;  // d/ds log(rising)
  long double power = a_pow / a;     // a^{-s-2j+1}
  const long double inv_a2 = 1.0L / (a * a);
  for (std::size_t j = 0; j < kBernoulliOverFactorial.size(); ++j) {
    const long double term = kBernoulliOverFactorial[j] * rising * power;
    value += term;
    if constexpr (kWithDerivative) ds += term * (rising_log_ds - log_a);
    const long double m = static_cast<long double>(2 * j + 1);
    rising *= (s + m) * (s + m + 1.0L);
    rising_log_ds += 1.0L / (s + m) + 1.0L / (s + m + 1.0L);
    power *= inv_a2;
  }
  return {static_cast<double>(value), static_cast<double>(ds)};
}

}  // namespace

double hurwitz_zeta(double s, double q) { return evaluate<false>(s, q).value; }

double hurwitz_zeta_ds(double s, double q) { return evaluate<true>(s, q).ds; }

ZetaWithDerivative hurwitz_zeta_with_ds(double s, double q) { return evaluate<true>(s, q); }

}  // namespace misinfo
