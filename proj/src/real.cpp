#include "orbits/real.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "orbits/precision.hpp"

namespace orbits {

double Real::log2_abs() const {
  if (is_zero()) return -std::numeric_limits<double>::infinity();
  if (!is_finite()) return std::numeric_limits<double>::infinity();
  long exp = 0;
  const double mant = mpfr_get_d_2exp(&exp, v_, MPFR_RNDN);
  return std::log2(std::fabs(mant)) + static_cast<double>(exp);
}

double log2_abs(double x) {
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log2(std::fabs(x));
}

Real pow10(long k, const Real& like) {
  Real r = Real::with_precision(like.precision());
  mpfr_set_si(r.get(), 10, MPFR_RNDN);
  mpfr_pow_si(r.get(), r.get(), k, MPFR_RNDN);
  return r;
}

std::ostream& operator<<(std::ostream& os, const Real& x) {
  const auto bits = x.precision();
  const int digits = std::max(1, static_cast<int>(std::floor(static_cast<double>(bits) * 0.30102999566398120)));
  return os << format_decimal(x, std::min(digits, 40));
}

}  // namespace orbits
