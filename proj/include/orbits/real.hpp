#pragma once

// Arbitrary-precision real number backed by MPFR.
//
// Every Real carries its own mantissa width. Arithmetic operators return a
// value whose precision is the larger of the operand precisions; compound
// assignment widens the left-hand side when the right-hand side is wider.
// There is no process-wide default precision: values created from integer or
// double literals are exact at 64 bits and pick up the working precision as
// soon as they meet a context-created value.
//
// The in-place kernels at the bottom (mul_into, add_mul, ...) round to the
// precision of the destination and never allocate; they are what the Taylor
// recurrences use in their inner loops.

#include <mpfr.h>

#include <Eigen/Core>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

namespace orbits {

class Real {
 public:
  static constexpr mpfr_prec_t kLiteralBits = 64;

  Real() {
    mpfr_init2(v_, kLiteralBits);
    mpfr_set_zero(v_, 1);
  }
  Real(int x) : Real(static_cast<long>(x)) {}
  Real(long x) {
    mpfr_init2(v_, kLiteralBits);
    mpfr_set_si(v_, x, MPFR_RNDN);
  }
  Real(double x) {
    mpfr_init2(v_, kLiteralBits);
    mpfr_set_d(v_, x, MPFR_RNDN);
  }

  // Zero carrying `bits` of mantissa.
  static Real with_precision(mpfr_prec_t bits) {
    Real r(Uninit{}, bits);
    mpfr_set_zero(r.v_, 1);
    return r;
  }

  Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Real(Real&& o) noexcept {
    v_[0] = o.v_[0];
    o.v_->_mpfr_d = nullptr;
  }
  Real& operator=(const Real& o) {
    if (this == &o) return *this;
    if (empty()) {
      mpfr_init2(v_, mpfr_get_prec(o.v_));
    } else if (mpfr_get_prec(v_) != mpfr_get_prec(o.v_)) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
    }
    mpfr_set(v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    std::swap(v_[0], o.v_[0]);
    return *this;
  }
  ~Real() {
    if (!empty()) mpfr_clear(v_);
  }

  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
  // Rounds the value to `bits` of mantissa.
  void set_precision(mpfr_prec_t bits) { mpfr_prec_round(v_, bits, MPFR_RNDN); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long_floor() const { return mpfr_get_si(v_, MPFR_RNDD); }
  // log2|x| as a double; finite for any nonzero finite value, even far outside
  // the double exponent range. Returns -inf for zero.
  double log2_abs() const;

  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  bool is_nan() const { return mpfr_nan_p(v_) != 0; }
  bool is_inf() const { return mpfr_inf_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  Real operator-() const {
    Real r(Uninit{}, precision());
    mpfr_neg(r.v_, v_, MPFR_RNDN);
    return r;
  }
  Real operator+() const { return *this; }

  Real& operator+=(const Real& o) {
    widen_to(o);
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator-=(const Real& o) {
    widen_to(o);
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator*=(const Real& o) {
    widen_to(o);
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator/=(const Real& o) {
    widen_to(o);
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator+=(long o) {
    mpfr_add_si(v_, v_, o, MPFR_RNDN);
    return *this;
  }
  Real& operator-=(long o) {
    mpfr_sub_si(v_, v_, o, MPFR_RNDN);
    return *this;
  }
  Real& operator*=(long o) {
    mpfr_mul_si(v_, v_, o, MPFR_RNDN);
    return *this;
  }
  Real& operator/=(long o) {
    mpfr_div_si(v_, v_, o, MPFR_RNDN);
    return *this;
  }
  Real& operator+=(int o) { return *this += static_cast<long>(o); }
  Real& operator-=(int o) { return *this -= static_cast<long>(o); }
  Real& operator*=(int o) { return *this *= static_cast<long>(o); }
  Real& operator/=(int o) { return *this /= static_cast<long>(o); }

  friend Real operator+(const Real& a, const Real& b) { return binary(a, b, mpfr_add); }
  friend Real operator-(const Real& a, const Real& b) { return binary(a, b, mpfr_sub); }
  friend Real operator*(const Real& a, const Real& b) { return binary(a, b, mpfr_mul); }
  friend Real operator/(const Real& a, const Real& b) { return binary(a, b, mpfr_div); }

  friend Real operator+(Real a, long b) { return a += b; }
  friend Real operator-(Real a, long b) { return a -= b; }
  friend Real operator*(Real a, long b) { return a *= b; }
  friend Real operator/(Real a, long b) { return a /= b; }
  friend Real operator+(long a, Real b) { return b += a; }
  friend Real operator-(long a, const Real& b) {
    Real r(Uninit{}, b.precision());
    mpfr_si_sub(r.v_, a, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator*(long a, Real b) { return b *= a; }
  friend Real operator/(long a, const Real& b) {
    Real r(Uninit{}, b.precision());
    mpfr_si_div(r.v_, a, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator+(const Real& a, int b) { return a + static_cast<long>(b); }
  friend Real operator-(const Real& a, int b) { return a - static_cast<long>(b); }
  friend Real operator*(const Real& a, int b) { return a * static_cast<long>(b); }
  friend Real operator/(const Real& a, int b) { return a / static_cast<long>(b); }
  friend Real operator+(int a, const Real& b) { return static_cast<long>(a) + b; }
  friend Real operator-(int a, const Real& b) { return static_cast<long>(a) - b; }
  friend Real operator*(int a, const Real& b) { return static_cast<long>(a) * b; }
  friend Real operator/(int a, const Real& b) { return static_cast<long>(a) / b; }

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b) {
    if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
    const int c = mpfr_cmp(a.v_, b.v_);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }
  friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) == 0 && !a.is_nan(); }
  friend std::partial_ordering operator<=>(const Real& a, long b) {
    if (a.is_nan()) return std::partial_ordering::unordered;
    const int c = mpfr_cmp_si(a.v_, b);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }
  friend bool operator==(const Real& a, int b) { return a == static_cast<long>(b); }
  friend std::partial_ordering operator<=>(const Real& a, int b) { return a <=> static_cast<long>(b); }

  friend std::ostream& operator<<(std::ostream& os, const Real& x);

 private:
  struct Uninit {};
  Real(Uninit, mpfr_prec_t bits) { mpfr_init2(v_, bits); }

  bool empty() const { return v_->_mpfr_d == nullptr; }
  void widen_to(const Real& o) {
    if (mpfr_get_prec(o.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(o.v_), MPFR_RNDN);
  }
  template <typename Op>
  static Real binary(const Real& a, const Real& b, Op op) {
    Real r(Uninit{}, std::max(a.precision(), b.precision()));
    op(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }

  mpfr_t v_;

  friend Real sqrt(const Real& x);
  friend Real abs(const Real& x);
};

inline Real sqrt(const Real& x) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_sqrt(r.v_, x.v_, MPFR_RNDN);
  return r;
}
inline Real abs(const Real& x) {
  Real r(Real::Uninit{}, x.precision());
  mpfr_abs(r.v_, x.v_, MPFR_RNDN);
  return r;
}
inline Real fabs(const Real& x) { return abs(x); }
inline Real max(const Real& a, const Real& b) { return a < b ? b : a; }
inline Real min(const Real& a, const Real& b) { return b < a ? b : a; }
// 10^k at the precision of `like`.
Real pow10(long k, const Real& like);

// ---- scalar-generic helpers -------------------------------------------------
// The numeric core is templated on the scalar type; these overloads give
// double and Real the same vocabulary.

inline double zero_like(double) { return 0.0; }
inline Real zero_like(const Real& like) { return Real::with_precision(like.precision()); }
inline double from_double_like(double, double v) { return v; }
inline Real from_double_like(const Real& like, double v) {
  Real r = Real::with_precision(like.precision());
  mpfr_set_d(r.get(), v, MPFR_RNDN);
  return r;
}
inline double to_double(double x) { return x; }
inline double to_double(const Real& x) { return x.to_double(); }
double log2_abs(double x);
inline double log2_abs(const Real& x) { return x.log2_abs(); }

// In-place kernels. Destination precision governs rounding.
inline void assign(double& r, double a) { r = a; }
inline void assign(Real& r, const Real& a) { mpfr_set(r.get(), a.get(), MPFR_RNDN); }
inline void set_zero(double& r) { r = 0.0; }
inline void set_zero(Real& r) { mpfr_set_zero(r.get(), 1); }
inline void sub_into(double& r, double a, double b) { r = a - b; }
inline void sub_into(Real& r, const Real& a, const Real& b) { mpfr_sub(r.get(), a.get(), b.get(), MPFR_RNDN); }
inline void add_assign(double& r, double a) { r += a; }
inline void add_assign(Real& r, const Real& a) { mpfr_add(r.get(), r.get(), a.get(), MPFR_RNDN); }
inline void sub_assign(double& r, double a) { r -= a; }
inline void sub_assign(Real& r, const Real& a) { mpfr_sub(r.get(), r.get(), a.get(), MPFR_RNDN); }
inline void mul_into(double& r, double a, double b) { r = a * b; }
inline void mul_into(Real& r, const Real& a, const Real& b) { mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDN); }
inline void mul_assign_si(double& r, long k) { r *= static_cast<double>(k); }
inline void mul_assign_si(Real& r, long k) { mpfr_mul_si(r.get(), r.get(), k, MPFR_RNDN); }
inline void div_assign_si(double& r, long k) { r /= static_cast<double>(k); }
inline void div_assign_si(Real& r, long k) { mpfr_div_si(r.get(), r.get(), k, MPFR_RNDN); }
inline void div_into_si(double& r, double a, long k) { r = a / static_cast<double>(k); }
inline void div_into_si(Real& r, const Real& a, long k) { mpfr_div_si(r.get(), a.get(), k, MPFR_RNDN); }
inline void div_assign(double& r, double a) { r /= a; }
inline void div_assign(Real& r, const Real& a) { mpfr_div(r.get(), r.get(), a.get(), MPFR_RNDN); }
// acc += a*b
inline void add_mul(double& acc, double a, double b, double&) { acc += a * b; }
inline void add_mul(Real& acc, const Real& a, const Real& b, Real& tmp) {
  mpfr_mul(tmp.get(), a.get(), b.get(), MPFR_RNDN);
  mpfr_add(acc.get(), acc.get(), tmp.get(), MPFR_RNDN);
}
// acc += k*a*b
inline void add_mul_si(double& acc, double a, double b, long k, double&) { acc += static_cast<double>(k) * a * b; }
inline void add_mul_si(Real& acc, const Real& a, const Real& b, long k, Real& tmp) {
  mpfr_mul(tmp.get(), a.get(), b.get(), MPFR_RNDN);
  mpfr_mul_si(tmp.get(), tmp.get(), k, MPFR_RNDN);
  mpfr_add(acc.get(), acc.get(), tmp.get(), MPFR_RNDN);
}
// r = r*x + c  (one Horner step)
inline void horner_step(double& r, double x, double c) { r = r * x + c; }
inline void horner_step(Real& r, const Real& x, const Real& c) {
  mpfr_mul(r.get(), r.get(), x.get(), MPFR_RNDN);
  mpfr_add(r.get(), r.get(), c.get(), MPFR_RNDN);
}

}  // namespace orbits

namespace Eigen {

template <>
struct NumTraits<orbits::Real> : GenericNumTraits<orbits::Real> {
  using Real = orbits::Real;
  using NonInteger = orbits::Real;
  using Nested = orbits::Real;
  using Literal = orbits::Real;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 8
  };
  static inline Real epsilon() { return Real(1e-300); }
  static inline Real dummy_precision() { return Real(1e-300); }
  static inline Real highest() { return Real(1e300); }
  static inline Real lowest() { return Real(-1e300); }
  static inline int digits10() { return 300; }
};

}  // namespace Eigen
