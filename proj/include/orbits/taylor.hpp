#pragma once

// High-order Taylor series integrator for the 12-dimensional three-body flow
// and its 36-dimensional variational extension.
//
// Coefficients come from automatic-differentiation recurrences. For each pair
// (i<j) with separation d = r_j - r_i the integrator carries
//   s = |d|^2            (Cauchy products of the coordinate differences)
//   g = s^(-3/2)         (power recurrence n s_0 g_n = sum ((p+1)k - n) s_k g_{n-k})
// and the acceleration series are Cauchy products d*g. Sensitivities are
// handled in forward mode: every series carries its derivative with respect to
// vx and vy, propagated through the same products and through
// s g' = p g s' for the power.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "orbits/dynamics.hpp"
#include "orbits/precision.hpp"
#include "orbits/real.hpp"

namespace orbits {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One step of the integrator: the series of every component about t0.
/// coeffs(c, n) is the n-th Taylor coefficient of component c.
template <typename Scalar>
struct TaylorStep {
  Scalar t0;
  Scalar h;
  MatX<Scalar> coeffs;

  int order() const { return static_cast<int>(coeffs.cols()) - 1; }
  int dim() const { return static_cast<int>(coeffs.rows()); }

  // Horner evaluation of the first `components` series at offset tau; `out`
  // must already hold values at the working precision.
  void eval_into(const Scalar& tau, VecX<Scalar>& out, int components) const {
    const int n_max = order();
    for (int c = 0; c < components; ++c) {
      assign(out(c), coeffs(c, n_max));
      for (int n = n_max - 1; n >= 0; --n) horner_step(out(c), tau, coeffs(c, n));
    }
  }
  void eval_into(const Scalar& tau, VecX<Scalar>& out) const { eval_into(tau, out, dim()); }

  VecX<Scalar> eval(const Scalar& tau, int components) const {
    VecX<Scalar> out = VecX<Scalar>::Constant(components, zero_like(coeffs(0, 0)));
    eval_into(tau, out, components);
    return out;
  }
};

template <typename Scalar>
class TaylorRecurrence {
 public:
  TaylorRecurrence(int order, int tangents, const Scalar& like)
      : order_(order), tangents_(tangents), dim_(kStateDim * (1 + tangents)) {
    if (order < 2) throw std::invalid_argument("Taylor order must be at least 2");
    if (tangents != 0 && tangents != 2) throw std::invalid_argument("tangents must be 0 or 2");
    const Scalar z = zero_like(like);
    const auto series = [&] { return std::vector<Scalar>(static_cast<std::size_t>(order + 1), z); };
    for (int p = 0; p < 3; ++p) {
      dx_[p] = series();
      dy_[p] = series();
      s_[p] = series();
      g_[p] = series();
      for (int q = 0; q < tangents; ++q) {
        tdx_[q][p] = series();
        tdy_[q][p] = series();
        ts_[q][p] = series();
        tg_[q][p] = series();
      }
    }
    for (auto& a : acc_) a = z;
    tmp_ = z;
    work_ = z;
    work2_ = z;
  }

  int order() const { return order_; }
  int dim() const { return dim_; }

  /// Fills `coeffs` (dim x order+1) with the Taylor coefficients of the flow
  /// through `w`. Throws SingularityError on coincident bodies.
  void expand(const VecX<Scalar>& w, MatX<Scalar>& coeffs) {
    if (coeffs.rows() != dim_ || coeffs.cols() != order_ + 1) {
      coeffs = MatX<Scalar>::Constant(dim_, order_ + 1, tmp_);
    }
    for (int c = 0; c < dim_; ++c) assign(coeffs(c, 0), w(c));

    for (int n = 0; n < order_; ++n) {
      for (auto& a : acc_) set_zero(a);
      for (int p = 0; p < 3; ++p) base_pair(coeffs, p, n);
      for (int q = 0; q < tangents_; ++q) {
        for (int p = 0; p < 3; ++p) tangent_pair(coeffs, q, p, n);
      }
      for (int level = 0; level <= tangents_; ++level) {
        const int off = level * kStateDim;
        for (int b = 0; b < kBodies; ++b) {
          div_into_si(coeffs(off + x_index(b), n + 1), coeffs(off + vx_index(b), n), n + 1);
          div_into_si(coeffs(off + y_index(b), n + 1), coeffs(off + vy_index(b), n), n + 1);
          div_into_si(coeffs(off + vx_index(b), n + 1), acc_[level * 6 + 2 * b], n + 1);
          div_into_si(coeffs(off + vy_index(b), n + 1), acc_[level * 6 + 2 * b + 1], n + 1);
        }
      }
    }
  }

  // Series of |r_j - r_i|^2 and |r_j - r_i|^-3 for pair index p (see kPairs)
  // from the last expansion.
  const std::vector<Scalar>& distance_series(int p) const { return s_[p]; }
  const std::vector<Scalar>& inverse_cube_series(int p) const { return g_[p]; }

 private:
  // sum_{k=lo..n} a_k b_{n-k} accumulated into acc
  void convolve_add(Scalar& acc, const std::vector<Scalar>& a, const std::vector<Scalar>& b, int n, int lo = 0) {
    for (int k = lo; k <= n; ++k) add_mul(acc, a[k], b[n - k], tmp_);
  }
  // sum_{k=0..n} a_k a_{n-k} using the symmetry of the square
  void square_add(Scalar& acc, const std::vector<Scalar>& a, int n) {
    set_zero(work2_);
    for (int k = 0; 2 * k < n; ++k) add_mul(work2_, a[k], a[n - k], tmp_);
    mul_assign_si(work2_, 2);
    add_assign(acc, work2_);
    if (n % 2 == 0) add_mul(acc, a[n / 2], a[n / 2], tmp_);
  }

  void base_pair(const MatX<Scalar>& c, int p, int n) {
    const auto [i, j] = kPairs[p];
    auto& dx = dx_[p];
    auto& dy = dy_[p];
    auto& s = s_[p];
    auto& g = g_[p];
    sub_into(dx[n], c(x_index(j), n), c(x_index(i), n));
    sub_into(dy[n], c(y_index(j), n), c(y_index(i), n));

    set_zero(s[n]);
    square_add(s[n], dx, n);
    square_add(s[n], dy, n);

    if (n == 0) {
      if (s[0] == 0) throw SingularityError(i, j);
      using std::sqrt;
      assign(g[0], 1 / (s[0] * sqrt(s[0])));
    } else {
      // p = -3/2: n s0 g_n = sum_{k=1..n} (-k/2 - n) s_k g_{n-k}
      set_zero(g[n]);
      for (int k = 1; k <= n; ++k) add_mul_si(g[n], s[k], g[n - k], -(k + 2L * n), tmp_);
      div_assign_si(g[n], 2L * n);
      div_assign(g[n], s[0]);
    }

    set_zero(work_);
    convolve_add(work_, dx, g, n);
    add_assign(acc_[2 * i], work_);
    sub_assign(acc_[2 * j], work_);
    set_zero(work_);
    convolve_add(work_, dy, g, n);
    add_assign(acc_[2 * i + 1], work_);
    sub_assign(acc_[2 * j + 1], work_);
  }

  void tangent_pair(const MatX<Scalar>& c, int q, int p, int n) {
    const auto [i, j] = kPairs[p];
    const int off = (q + 1) * kStateDim;
    auto& tdx = tdx_[q][p];
    auto& tdy = tdy_[q][p];
    auto& ts = ts_[q][p];
    auto& tg = tg_[q][p];
    const auto& dx = dx_[p];
    const auto& dy = dy_[p];
    const auto& s = s_[p];
    const auto& g = g_[p];
    sub_into(tdx[n], c(off + x_index(j), n), c(off + x_index(i), n));
    sub_into(tdy[n], c(off + y_index(j), n), c(off + y_index(i), n));

    // s' = 2 (dx dx' + dy dy')
    set_zero(ts[n]);
    convolve_add(ts[n], dx, tdx, n);
    convolve_add(ts[n], dy, tdy, n);
    mul_assign_si(ts[n], 2);

    // s g' = -3/2 g s'
    set_zero(work_);
    convolve_add(work_, g, ts, n);
    mul_assign_si(work_, -3);
    div_assign_si(work_, 2);
    set_zero(work2_);
    convolve_add(work2_, s, tg, n, 1);
    sub_into(tg[n], work_, work2_);
    div_assign(tg[n], s[0]);

    Scalar* ax = &acc_[(q + 1) * 6 + 2 * i];
    Scalar* ax_j = &acc_[(q + 1) * 6 + 2 * j];
    set_zero(work_);
    convolve_add(work_, tdx, g, n);
    convolve_add(work_, dx, tg, n);
    add_assign(ax[0], work_);
    sub_assign(ax_j[0], work_);
    set_zero(work_);
    convolve_add(work_, tdy, g, n);
    convolve_add(work_, dy, tg, n);
    add_assign(ax[1], work_);
    sub_assign(ax_j[1], work_);
  }

  int order_;
  int tangents_;
  int dim_;
  std::vector<Scalar> dx_[3], dy_[3], s_[3], g_[3];
  std::vector<Scalar> tdx_[2][3], tdy_[2][3], ts_[2][3], tg_[2][3];
  // accelerations (x,y per body) for the base level and each tangent level
  Scalar acc_[18];
  Scalar tmp_, work_, work2_;
};

/// Taylor coefficients of the base (12) or extended (36) flow at a point;
/// h is left at zero.
template <typename Scalar>
TaylorStep<Scalar> taylor_coeffs(const State<Scalar>& s, int order) {
  TaylorRecurrence<Scalar> rec(order, 0, s.u(0));
  TaylorStep<Scalar> step{s.t, zero_like(s.t), {}};
  VecX<Scalar> w = s.u;
  rec.expand(w, step.coeffs);
  return step;
}

template <typename Scalar>
TaylorStep<Scalar> taylor_coeffs(const ExtState<Scalar>& e, int order) {
  TaylorRecurrence<Scalar> rec(order, 2, e.w(0));
  TaylorStep<Scalar> step{e.t, zero_like(e.t), {}};
  VecX<Scalar> w = e.w;
  rec.expand(w, step.coeffs);
  return step;
}

struct StepSize {
  double h = 0.0;
  bool underflow = false;
};

/// h = safety * min over k in {N-1, N} of (tol / |c_k|_inf)^(1/k), with
/// tol = 10^(-digits+4) and norms over the first `base_components` rows,
/// clamped to h_max. Below h_min the step is flagged as underflow.
template <typename Scalar>
StepSize step_size(const MatX<Scalar>& coeffs, const PrecisionConfig& cfg, int base_components = kStateDim) {
  const int n_max = static_cast<int>(coeffs.cols()) - 1;
  const double log2_tol = cfg.log10_step_tol() * 3.32192809488736234787;
  double h = std::numeric_limits<double>::infinity();
  for (int k : {n_max - 1, n_max}) {
    double log2_norm = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < base_components; ++c) log2_norm = std::max(log2_norm, log2_abs(coeffs(c, k)));
    if (std::isinf(log2_norm)) continue;
    h = std::min(h, std::exp2((log2_tol - log2_norm) / k));
  }
  StepSize out;
  out.h = std::min(cfg.step_safety * h, cfg.h_max);
  out.underflow = out.h < cfg.h_min;
  return out;
}

/// Evaluates a step at offset tau in [0, h].
template <typename Scalar>
State<Scalar> dense_eval(const TaylorStep<Scalar>& step, const Scalar& tau) {
  if (tau < 0 || tau > step.h) throw std::out_of_range("dense_eval offset outside [0, h]");
  State<Scalar> s;
  s.t = step.t0 + tau;
  s.u = step.eval(tau, kStateDim);
  return s;
}

template <typename Scalar>
ExtState<Scalar> dense_eval_ext(const TaylorStep<Scalar>& step, const Scalar& tau) {
  if (step.dim() != kExtDim) throw std::invalid_argument("dense_eval_ext needs a 36-component step");
  if (tau < 0 || tau > step.h) throw std::out_of_range("dense_eval offset outside [0, h]");
  ExtState<Scalar> e;
  e.t = step.t0 + tau;
  e.w = step.eval(tau, kExtDim);
  return e;
}

template <typename Scalar>
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void observe(const TaylorStep<Scalar>& step) = 0;
};

enum class IntegrationStatus { reached_end, collision, step_underflow, step_limit };

const char* to_string(IntegrationStatus s);

template <typename StateT>
struct IntegrationOutcome {
  IntegrationStatus status = IntegrationStatus::reached_end;
  StateT final;
  long steps = 0;
  double min_distance = std::numeric_limits<double>::infinity();

  bool ok() const { return status == IntegrationStatus::reached_end; }
};

namespace detail {

template <typename Scalar>
IntegrationStatus advance(VecX<Scalar>& w, Scalar& t, const Scalar& t_end, int tangents,
                          const PrecisionConfig& cfg, std::span<StepObserver<Scalar>* const> observers,
                          long& steps, double& min_distance) {
  if (!(t < t_end)) return IntegrationStatus::reached_end;
  TaylorRecurrence<Scalar> rec(cfg.taylor_order, tangents, w(0));
  TaylorStep<Scalar> step{t, zero_like(t), {}};
  while (t < t_end) {
    if (steps >= cfg.max_steps) return IntegrationStatus::step_limit;
    const double dmin = to_double(min_pair_distance<Scalar>(w.template head<kStateDim>()));
    min_distance = std::min(min_distance, dmin);
    if (dmin < cfg.collision_distance) return IntegrationStatus::collision;
    try {
      rec.expand(w, step.coeffs);
    } catch (const SingularityError&) {
      return IntegrationStatus::collision;
    }
    const StepSize sz = step_size(step.coeffs, cfg);
    if (sz.underflow) return IntegrationStatus::step_underflow;

    Scalar h = from_double_like(t, sz.h);
    const Scalar remaining = t_end - t;
    const bool last = !(h < remaining);
    if (last) h = remaining;
    step.t0 = t;
    step.h = h;
    for (StepObserver<Scalar>* obs : observers) obs->observe(step);
    step.eval_into(h, w);
    if (last) {
      t = t_end;
    } else {
      t += h;
    }
    ++steps;
  }
  return IntegrationStatus::reached_end;
}

}  // namespace detail

/// Integrates the base flow from start.t to t_end. The last step is shortened
/// to land exactly on t_end. Every observer sees every step in time order.
/// Collisions (distance below cfg.collision_distance), step-size underflow and
/// the step budget are reported as outcomes.
template <typename Scalar>
IntegrationOutcome<State<Scalar>> integrate(const State<Scalar>& start, const Scalar& t_end,
                                            const PrecisionConfig& cfg,
                                            std::type_identity_t<std::span<StepObserver<Scalar>* const>> observers = {}) {
  if (t_end < start.t) throw std::invalid_argument("integrate: t_end precedes the start time");
  IntegrationOutcome<State<Scalar>> out;
  VecX<Scalar> w = start.u;
  Scalar t = start.t;
  out.status = detail::advance(w, t, t_end, 0, cfg, observers, out.steps, out.min_distance);
  out.final.t = t;
  out.final.u = w;
  return out;
}

/// Same stepper on the 36-dimensional system; the step size follows the base
/// components only.
template <typename Scalar>
IntegrationOutcome<ExtState<Scalar>> integrate(const ExtState<Scalar>& start, const Scalar& t_end,
                                               const PrecisionConfig& cfg,
                                               std::type_identity_t<std::span<StepObserver<Scalar>* const>> observers = {}) {
  if (t_end < start.t) throw std::invalid_argument("integrate: t_end precedes the start time");
  IntegrationOutcome<ExtState<Scalar>> out;
  VecX<Scalar> w = start.w;
  Scalar t = start.t;
  out.status = detail::advance(w, t, t_end, 2, cfg, observers, out.steps, out.min_distance);
  out.final.t = t;
  out.final.w = w;
  return out;
}

}  // namespace orbits
