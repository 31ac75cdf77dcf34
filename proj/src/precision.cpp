#include "orbits/precision.hpp"

#include <cctype>
#include <cmath>
#include <memory>

namespace orbits {

namespace {

constexpr double kLog2Of10 = 3.32192809488736234787;

struct MpfrString {
  char* p = nullptr;
  ~MpfrString() {
    if (p) mpfr_free_str(p);
  }
};

// Returns the position of the first offending character, or npos if `text`
// is a well-formed decimal.
std::size_t find_syntax_error(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  if (n == 0) return 0;
  if (text[i] == '+' || text[i] == '-') ++i;
  std::size_t mantissa_digits = 0;
  while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
    ++i;
    ++mantissa_digits;
  }
  if (i < n && text[i] == '.') {
    ++i;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      ++mantissa_digits;
    }
  }
  if (mantissa_digits == 0) return i;
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < n && (text[i] == '+' || text[i] == '-')) ++i;
    const std::size_t exp_start = i;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i == exp_start) return i;
  }
  return i == n ? std::string_view::npos : i;
}

}  // namespace

ArithmeticContext make_context(int decimal_digits) {
  if (decimal_digits < ArithmeticContext::kMinDigits) {
    throw PrecisionError("decimal digits must be at least 16, got " + std::to_string(decimal_digits));
  }
  const auto bits = static_cast<mpfr_prec_t>(std::ceil(decimal_digits * kLog2Of10)) + ArithmeticContext::kGuardBits;
  return ArithmeticContext(decimal_digits, bits);
}

Real ArithmeticContext::from_long(long v) const {
  Real r = zero();
  mpfr_set_si(r.get(), v, MPFR_RNDN);
  return r;
}

Real ArithmeticContext::parse(std::string_view text) const { return parse_decimal(text, *this); }

Real parse_decimal(std::string_view text, const ArithmeticContext& ctx) {
  const std::size_t bad = find_syntax_error(text);
  if (bad != std::string_view::npos) {
    throw ParseError("malformed decimal '" + std::string(text) + "' at position " + std::to_string(bad), bad);
  }
  Real r = ctx.zero();
  const std::string owned(text);
  mpfr_set_str(r.get(), owned.c_str(), 10, MPFR_RNDN);
  return r;
}

std::string format_decimal(const Real& x, int digits) {
  if (digits < 1) digits = 1;
  if (x.is_nan()) return "nan";
  if (!x.is_finite()) return x.sign() < 0 ? "-inf" : "inf";

  mpfr_exp_t e = 0;
  MpfrString s;
  s.p = mpfr_get_str(nullptr, &e, 10, static_cast<std::size_t>(digits), x.get(), MPFR_RNDN);
  std::string mant(s.p);
  std::string sign;
  if (!mant.empty() && mant[0] == '-') {
    sign = "-";
    mant.erase(0, 1);
  }
  if (x.is_zero()) {
    sign.clear();
    e = 1;
  }
  const long sci = static_cast<long>(e) - 1;

  std::string out = sign;
  if (sci >= 0 && sci < digits) {
    out += mant.substr(0, static_cast<std::size_t>(sci) + 1);
    if (static_cast<std::size_t>(sci) + 1 < mant.size()) {
      out += '.';
      out += mant.substr(static_cast<std::size_t>(sci) + 1);
    }
  } else if (sci < 0 && sci >= -5) {
    out += "0.";
    out.append(static_cast<std::size_t>(-sci - 1), '0');
    out += mant;
  } else {
    out += mant.substr(0, 1);
    if (mant.size() > 1) {
      out += '.';
      out += mant.substr(1);
    }
    out += 'e';
    out += std::to_string(sci);
  }
  return out;
}

int significant_digits(std::string_view text) {
  int count = 0;
  bool leading = true;
  for (char c : text) {
    if (c == 'e' || c == 'E') break;
    if (!std::isdigit(static_cast<unsigned char>(c))) continue;
    if (leading && c == '0') continue;
    leading = false;
    ++count;
  }
  return count;
}

void PrecisionConfig::validate() const {
  if (decimal_digits < ArithmeticContext::kMinDigits) throw PrecisionError("decimal_digits must be >= 16");
  if (taylor_order < 4) throw PrecisionError("taylor_order must be >= 4");
  if (!(step_safety > 0.0 && step_safety < 1.0)) throw PrecisionError("step_safety must lie in (0,1)");
  if (!(h_min > 0.0 && h_min < h_max)) throw PrecisionError("need 0 < h_min < h_max");
  if (!(collision_distance >= 0.0)) throw PrecisionError("collision_distance must be non-negative");
  if (max_steps < 1) throw PrecisionError("max_steps must be positive");
  if (find_syntax_error(convergence_tol) != std::string_view::npos) {
    throw PrecisionError("convergence_tol is not a decimal: " + convergence_tol);
  }
}

PrecisionConfig make_config(int digits, int order, std::string tol) {
  PrecisionConfig c;
  c.decimal_digits = digits;
  c.taylor_order = order;
  c.convergence_tol = std::move(tol);
  c.validate();
  return c;
}

namespace presets {
PrecisionConfig scan() { return make_config(134, 154, "1e-60"); }
PrecisionConfig refine() { return make_config(192, 220, "1e-160"); }
PrecisionConfig verify() { return make_config(231, 264, "1e-190"); }

PrecisionConfig desk_scan() { return make_config(32, 40, "1e-14"); }
PrecisionConfig desk_correct() { return make_config(64, 80, "1e-30"); }
PrecisionConfig desk_refine() { return make_config(96, 110, "1e-80"); }
PrecisionConfig desk_verify() { return make_config(128, 150, "1e-110"); }
}  // namespace presets

int suggested_order(int decimal_digits) { return static_cast<int>(std::ceil(1.15 * decimal_digits)); }

}  // namespace orbits
