#include "orbits/correct.hpp"

#include <algorithm>
#include <cmath>

#include "text_util.hpp"

namespace orbits {

namespace {

CorrectionStatus from_integration(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::collision:
      return CorrectionStatus::collision;
    case IntegrationStatus::step_underflow:
      return CorrectionStatus::step_underflow;
    case IntegrationStatus::step_limit:
      return CorrectionStatus::step_limit;
    case IntegrationStatus::reached_end:
      break;
  }
  return CorrectionStatus::diverged;
}

Real euclidean_norm(const Vec12<Real>& v) {
  Real sum = zero_like(v(0));
  for (int k = 0; k < kStateDim; ++k) sum += v(k) * v(k);
  return sqrt(sum);
}

// ratio a/b as a double, safe for magnitudes outside the double range
double magnitude_ratio(const Real& a, const Real& b) {
  if (b.is_zero()) return std::numeric_limits<double>::infinity();
  return std::exp2(a.log2_abs() - b.log2_abs());
}

Triplet step_triplet(const Triplet& t, const Vec3& delta, const Real& tau) {
  return {t.vx + tau * delta(0), t.vy + tau * delta(1), t.T + tau * delta(2)};
}

}  // namespace

const char* to_string(CorrectionStatus s) {
  switch (s) {
    case CorrectionStatus::converged:
      return "converged";
    case CorrectionStatus::diverged:
      return "diverged";
    case CorrectionStatus::collision:
      return "collision";
    case CorrectionStatus::step_underflow:
      return "step_underflow";
    case CorrectionStatus::step_limit:
      return "step_limit";
  }
  return "unknown";
}

CorrectionStatus correction_status_from_string(const std::string& s) {
  for (auto st : {CorrectionStatus::converged, CorrectionStatus::diverged, CorrectionStatus::collision,
                  CorrectionStatus::step_underflow, CorrectionStatus::step_limit}) {
    if (s == to_string(st)) return st;
  }
  throw text::FormatError("unknown correction status '" + s + "'");
}

Triplet promote(const Triplet& t, const ArithmeticContext& ctx) {
  Triplet out = t;
  for (Real* r : {&out.vx, &out.vy, &out.T}) r->set_precision(ctx.bits());
  return out;
}

ShootingEval residual_and_jacobian(const Triplet& t, const PrecisionConfig& cfg) {
  if (!(t.T > 0)) throw std::invalid_argument("residual_and_jacobian: period must be positive");
  const ExtState<Real> start = initial_ext_state(t.velocity());
  const auto out = integrate(start, t.T, cfg);

  ShootingEval eval;
  eval.status = out.status;
  if (!out.ok()) return eval;

  const Vec12<Real> u0 = start.base();
  const Vec12<Real> uT = out.final.base();
  eval.residual.F = uT - u0;
  eval.residual.norm = euclidean_norm(eval.residual.F);
  eval.jacobian.J.col(0) = out.final.d_vx() - start.d_vx();
  eval.jacobian.J.col(1) = out.final.d_vy() - start.d_vy();
  eval.jacobian.J.col(2) = rhs<Real>(uT);
  return eval;
}

Vec3 least_squares_step(const Residual& r, const ShootingJacobian& j, int digits) {
  const Mat12x3& J = j.J;
  Eigen::Matrix<Real, 3, 3> A;
  Vec3 b;
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q <= p; ++q) {
      Real s = zero_like(J(0, 0));
      for (int k = 0; k < kStateDim; ++k) s += J(k, p) * J(k, q);
      A(p, q) = s;
      A(q, p) = s;
    }
    Real s = zero_like(J(0, 0));
    for (int k = 0; k < kStateDim; ++k) s -= J(k, p) * r.F(k);
    b(p) = s;
  }

  const Real scale = max(max(A(0, 0), A(1, 1)), A(2, 2));
  const Real floor = scale * pow10(20 - digits, scale);
  // LDL^T: D = diag(d), L unit lower triangular
  Real d[3];
  Real l[3][3];
  for (int p = 0; p < 3; ++p) {
    Real diag = A(p, p);
    for (int k = 0; k < p; ++k) diag -= l[p][k] * l[p][k] * d[k];
    if (!(diag > floor)) {
      throw DegenerateJacobian("normal equations are numerically singular (pivot " + std::to_string(p) + ")");
    }
    d[p] = diag;
    for (int q = p + 1; q < 3; ++q) {
      Real off = A(q, p);
      for (int k = 0; k < p; ++k) off -= l[q][k] * l[p][k] * d[k];
      l[q][p] = off / d[p];
    }
  }
  Real y[3];
  for (int p = 0; p < 3; ++p) {
    y[p] = b(p);
    for (int k = 0; k < p; ++k) y[p] -= l[p][k] * y[k];
  }
  Vec3 x;
  for (int p = 2; p >= 0; --p) {
    Real v = y[p] / d[p];
    for (int k = p + 1; k < 3; ++k) v -= l[k][p] * x(k);
    x(p) = v;
  }
  return x;
}

CorrectionResult canm_correct(const Triplet& start, const PrecisionConfig& cfg, const CanmOptions& opts) {
  const ArithmeticContext ctx = cfg.context();
  const Real tol = cfg.tolerance(ctx);
  CorrectionResult res;
  res.triplet = promote(start, ctx);
  res.final_norm = ctx.zero();

  if (!(res.triplet.T > 0)) return res;
  ShootingEval eval = residual_and_jacobian(res.triplet, cfg);
  if (!eval.ok()) {
    res.status = from_integration(eval.status);
    return res;
  }
  res.final_norm = eval.residual.norm;
  res.norm_history.push_back(eval.residual.norm);

  double tau = opts.tau0;
  int growth = 0;
  for (;;) {
    if (res.final_norm < tol) {
      res.status = CorrectionStatus::converged;
      return res;
    }
    if (res.iterations >= opts.max_iter) break;

    Vec3 delta;
    try {
      delta = least_squares_step(eval.residual, eval.jacobian, ctx.digits());
    } catch (const DegenerateJacobian&) {
      break;
    }
    const Triplet next = step_triplet(res.triplet, delta, from_double_like(ctx.zero(), tau));
    if (!(next.T > 0)) break;
    ShootingEval next_eval = residual_and_jacobian(next, cfg);
    ++res.iterations;
    res.tau_history.push_back(tau);
    if (!next_eval.ok()) {
      res.status = from_integration(next_eval.status);
      res.triplet = next;
      return res;
    }

    const Real& prev_norm = eval.residual.norm;
    const Real& new_norm = next_eval.residual.norm;
    growth = new_norm > prev_norm ? growth + 1 : 0;
    tau = std::min(1.0, tau * magnitude_ratio(prev_norm, new_norm));

    res.triplet = next;
    eval = std::move(next_eval);
    res.final_norm = eval.residual.norm;
    res.norm_history.push_back(eval.residual.norm);

    if (growth >= opts.growth_limit) break;
    if (tau < opts.tau_min) break;
  }
  res.status = CorrectionStatus::diverged;
  return res;
}

CorrectionResult newton_refine(const Triplet& start, const PrecisionConfig& cfg, const Real& target_norm,
                               const RefineOptions& opts) {
  const ArithmeticContext ctx = cfg.context();
  CorrectionResult res;
  res.triplet = promote(start, ctx);
  res.final_norm = ctx.zero();
  if (!(res.triplet.T > 0)) return res;

  ShootingEval eval = residual_and_jacobian(res.triplet, cfg);
  if (!eval.ok()) {
    res.status = from_integration(eval.status);
    return res;
  }
  res.final_norm = eval.residual.norm;
  res.norm_history.push_back(eval.residual.norm);

  int growth = 0;
  while (!(res.final_norm < target_norm)) {
    if (res.iterations >= opts.max_iter || growth >= opts.growth_limit) {
      res.status = CorrectionStatus::diverged;
      return res;
    }
    Vec3 delta;
    try {
      delta = least_squares_step(eval.residual, eval.jacobian, ctx.digits());
    } catch (const DegenerateJacobian&) {
      res.status = CorrectionStatus::diverged;
      return res;
    }
    const Triplet next{res.triplet.vx + delta(0), res.triplet.vy + delta(1), res.triplet.T + delta(2)};
    if (!(next.T > 0)) {
      res.status = CorrectionStatus::diverged;
      return res;
    }
    ShootingEval next_eval = residual_and_jacobian(next, cfg);
    ++res.iterations;
    res.tau_history.push_back(1.0);
    if (!next_eval.ok()) {
      res.status = from_integration(next_eval.status);
      res.triplet = next;
      return res;
    }
    growth = next_eval.residual.norm > eval.residual.norm ? growth + 1 : 0;
    res.triplet = next;
    eval = std::move(next_eval);
    res.final_norm = eval.residual.norm;
    res.norm_history.push_back(eval.residual.norm);
  }
  res.status = CorrectionStatus::converged;
  return res;
}

Verification verify(const Triplet& refined_a, const PrecisionConfig& cfg_a, const PrecisionConfig& cfg_b,
                    const RefineOptions& opts) {
  const ArithmeticContext ctx_b = cfg_b.context();
  Verification v;
  v.second = newton_refine(refined_a, cfg_b, cfg_b.tolerance(ctx_b), opts);
  v.refined = v.second.status == CorrectionStatus::converged;
  if (!v.refined) return v;

  const int cap = std::min(cfg_a.decimal_digits, cfg_b.decimal_digits);
  double worst = -std::numeric_limits<double>::infinity();
  const Triplet a = promote(refined_a, ctx_b);
  const Real* lhs[] = {&a.vx, &a.vy, &a.T};
  const Real* rhs_vals[] = {&v.second.triplet.vx, &v.second.triplet.vy, &v.second.triplet.T};
  for (int k = 0; k < 3; ++k) {
    const Real diff = abs(*lhs[k] - *rhs_vals[k]);
    if (diff.is_zero()) continue;
    const double rel = (diff.log2_abs() - rhs_vals[k]->log2_abs()) * 0.30102999566398120;
    worst = std::max(worst, rel);
  }
  v.agreed_digits = std::isinf(worst) ? cap : std::min(cap, static_cast<int>(std::floor(-worst)));
  return v;
}

bool is_result_status(const std::string& s) {
  if (s == "verified" || s == "unverified") return true;
  for (auto st : {CorrectionStatus::converged, CorrectionStatus::diverged, CorrectionStatus::collision,
                  CorrectionStatus::step_underflow, CorrectionStatus::step_limit}) {
    if (s == to_string(st)) return true;
  }
  return false;
}

std::string format_result_line(const ResultLine& r, int digits) {
  std::string s = r.status + " " + format_decimal(r.triplet.vx, digits) + " " +
                  format_decimal(r.triplet.vy, digits) + " " + format_decimal(r.triplet.T, digits) + " " +
                  format_decimal(r.norm, 6) + " " + std::to_string(r.count);
  if (!r.comment.empty()) s += " # " + r.comment;
  return s;
}

ResultLine parse_result_line(const std::string& line, const ArithmeticContext& ctx) {
  ResultLine r;
  const auto t = text::tokens(line, &r.comment);
  if (t.size() != 6) throw text::FormatError("result line needs 6 fields (status vx vy T norm count): " + line);
  if (!is_result_status(t[0])) throw text::FormatError("unknown result status '" + t[0] + "'");
  r.status = t[0];
  r.triplet = {ctx.parse(t[1]), ctx.parse(t[2]), ctx.parse(t[3])};
  r.norm = ctx.parse(t[4]);
  r.count = text::to_int(t[5]);
  return r;
}

}  // namespace orbits
