#pragma once

#include <random>

#include "orbits/correct.hpp"
#include "orbits/dynamics.hpp"
#include "orbits/precision.hpp"

namespace orbits::test {

// Random non-degenerate configuration: positions in [-2,2]^2, velocities in
// [-1,1]^2, pairwise distances at least 0.3.
inline State<Real> random_state(std::mt19937_64& rng, const ArithmeticContext& ctx) {
  std::uniform_real_distribution<double> pos(-2.0, 2.0), vel(-1.0, 1.0);
  State<Real> s;
  s.t = ctx.zero();
  for (;;) {
    for (int b = 0; b < kBodies; ++b) {
      s.u(x_index(b)) = from_double_like(ctx.zero(), pos(rng));
      s.u(y_index(b)) = from_double_like(ctx.zero(), pos(rng));
      s.u(vx_index(b)) = from_double_like(ctx.zero(), vel(rng));
      s.u(vy_index(b)) = from_double_like(ctx.zero(), vel(rng));
    }
    if (min_pair_distance<Real>(s.u).to_double() > 0.3) return s;
  }
}

inline VelocityPair<Real> velocity(const ArithmeticContext& ctx, const char* vx, const char* vy) {
  return {ctx.parse(vx), ctx.parse(vy)};
}

// log10 of |a-b| / max(|b|, floor)
inline double rel_log10(const Real& a, const Real& b, double floor = 1e-300) {
  const double num = abs(a - b).log2_abs();
  const double den = std::max(abs(b).log2_abs(), std::log2(floor));
  return (num - den) * 0.30102999566398120;
}

inline double log10_abs(const Real& x) { return x.log2_abs() * 0.30102999566398120; }

// Figure-eight refined by full Newton steps from a six-digit guess.
inline Triplet figure_eight(const PrecisionConfig& cfg, const char* target) {
  const ArithmeticContext ctx = cfg.context();
  const Triplet guess{ctx.parse("0.347111"), ctx.parse("0.532728"), ctx.parse("6.32445")};
  const CorrectionResult r = newton_refine(guess, cfg, ctx.parse(target));
  if (r.status != CorrectionStatus::converged) throw std::runtime_error("figure-eight refinement failed");
  return r.triplet;
}

}  // namespace orbits::test
