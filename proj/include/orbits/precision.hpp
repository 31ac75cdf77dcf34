#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "orbits/real.hpp"

namespace orbits {

class PrecisionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::invalid_argument(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Working precision for one computation. Immutable after creation; safe to
/// share between threads.
class ArithmeticContext {
 public:
  static constexpr int kMinDigits = 16;
  static constexpr int kGuardBits = 8;

  int digits() const { return digits_; }
  mpfr_prec_t bits() const { return bits_; }

  Real zero() const { return Real::with_precision(bits_); }
  Real from_long(long v) const;
  Real parse(std::string_view text) const;

 private:
  friend ArithmeticContext make_context(int decimal_digits);
  ArithmeticContext(int digits, mpfr_prec_t bits) : digits_(digits), bits_(bits) {}

  int digits_;
  mpfr_prec_t bits_;
};

/// Context with ceil(digits*log2(10)) + 8 guard bits of mantissa.
ArithmeticContext make_context(int decimal_digits);

/// Accepts [+-]digits[.digits][(e|E)[+-]digits]; at least one mantissa digit.
Real parse_decimal(std::string_view text, const ArithmeticContext& ctx);

/// Correctly rounded to `digits` significant decimals. Plain positional form
/// for moderate exponents, otherwise d.ddd...e<exp>.
std::string format_decimal(const Real& x, int digits);

/// Significant decimal digits written in a decimal string ("0.0012300" has 5).
int significant_digits(std::string_view text);

struct PrecisionConfig {
  int decimal_digits = 134;
  int taylor_order = 154;
  std::string convergence_tol = "1e-60";
  double step_safety = 0.9;

  // integrator guard rails
  double h_min = 1e-8;
  double h_max = 1.0;
  double collision_distance = 1e-6;
  long max_steps = 1000000;

  void validate() const;
  ArithmeticContext context() const { return make_context(decimal_digits); }
  Real tolerance(const ArithmeticContext& ctx) const { return parse_decimal(convergence_tol, ctx); }
  // Local truncation target used by the step-size rule: 10^(-digits+4).
  double log10_step_tol() const { return -decimal_digits + 4.0; }
};

PrecisionConfig make_config(int digits, int order, std::string tol);

namespace presets {
// Grid scan and modified Newton: order 154, 134 digits.
PrecisionConfig scan();
// Classical Newton refinement: order 220, 192 digits.
PrecisionConfig refine();
// Independent verification run: order 264, 231 digits.
PrecisionConfig verify();

// Desk-scale ladder used by tests and small runs.
PrecisionConfig desk_scan();     // 32 digits
PrecisionConfig desk_correct();  // 64 digits
PrecisionConfig desk_refine();   // 96 digits
PrecisionConfig desk_verify();   // 128 digits
}  // namespace presets

// Order suggested for a digit count, following the ~1.15 order/digit ratio of
// the full-scale presets. Advisory only.
int suggested_order(int decimal_digits);

}  // namespace orbits
