#pragma once

// Shooting correction of triplets (vx, vy, T) towards u(T) = u(0).
//
// Both correctors solve the 12x3 linearisation J d = -F in the least-squares
// sense. The modified Newton corrector damps the step with tau_k, adapted by
// tau_k = min(1, tau_{k-1} |F_{k-1}| / |F_k|) starting from tau_0; the
// classical refiner always takes the full step.

#include <Eigen/Core>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbits/dynamics.hpp"
#include "orbits/precision.hpp"
#include "orbits/taylor.hpp"

namespace orbits {

struct Triplet {
  Real vx;
  Real vy;
  Real T;

  VelocityPair<Real> velocity() const { return {vx, vy}; }
};

using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Mat12x3 = Eigen::Matrix<Real, kStateDim, 3>;

struct Residual {
  Vec12<Real> F;  // u(T) - u(0)
  Real norm;
};

struct ShootingJacobian {
  // columns: du(T)/dvx - du(0)/dvx, du(T)/dvy - du(0)/dvy, f(u(T))
  Mat12x3 J;
};

struct ShootingEval {
  IntegrationStatus status = IntegrationStatus::reached_end;
  Residual residual;
  ShootingJacobian jacobian;

  bool ok() const { return status == IntegrationStatus::reached_end; }
};

class DegenerateJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ShootingEval residual_and_jacobian(const Triplet& t, const PrecisionConfig& cfg);

/// Minimises |J d + F| through the 3x3 normal equations (LDL^T without
/// pivoting). Throws DegenerateJacobian when a pivot falls below
/// 10^(20-digits) times the largest diagonal entry of J^T J.
Vec3 least_squares_step(const Residual& r, const ShootingJacobian& j, int digits);

enum class CorrectionStatus { converged, diverged, collision, step_underflow, step_limit };

const char* to_string(CorrectionStatus s);
CorrectionStatus correction_status_from_string(const std::string& s);

struct CorrectionResult {
  CorrectionStatus status = CorrectionStatus::diverged;
  Triplet triplet;
  Real final_norm;
  int iterations = 0;
  std::vector<double> tau_history;
  std::vector<Real> norm_history;  // |F| at every evaluated iterate, starting point first
};

struct CanmOptions {
  double tau0 = 0.1;
  int max_iter = 100;
  double tau_min = 1e-6;
  int growth_limit = 5;  // consecutive residual increases tolerated
};

struct RefineOptions {
  int max_iter = 50;
  int growth_limit = 2;
};

/// Damped Newton iteration; converges when |F| < cfg.convergence_tol.
CorrectionResult canm_correct(const Triplet& start, const PrecisionConfig& cfg, const CanmOptions& opts = {});

/// Full Newton steps until |F| < target_norm.
CorrectionResult newton_refine(const Triplet& start, const PrecisionConfig& cfg, const Real& target_norm,
                               const RefineOptions& opts = {});

struct Verification {
  bool refined = false;     // the second refinement converged
  int agreed_digits = 0;    // floor(-log10 of max relative difference), capped at the coarser precision
  CorrectionResult second;  // refinement under the verification preset
};

/// Re-refines a triplet refined under cfg_a with cfg_b (target
/// cfg_b.convergence_tol) and counts the agreeing digits of vx, vy, T.
Verification verify(const Triplet& refined_a, const PrecisionConfig& cfg_a, const PrecisionConfig& cfg_b,
                    const RefineOptions& opts = {});

/// Copy of t carried at the precision of ctx.
Triplet promote(const Triplet& t, const ArithmeticContext& ctx);

// ---- files ------------------------------------------------------------------
// result line: status vx vy T norm count
//
// status is a correction status, or "verified" / "unverified" after the
// verification stage.

struct ResultLine {
  std::string status = "diverged";
  Triplet triplet;
  Real norm;
  int count = 0;        // iterations, or agreed digits in verification output
  std::string comment;  // trailing "# ..." provenance, without the marker
};

bool is_result_status(const std::string& s);
std::string format_result_line(const ResultLine& r, int digits);
ResultLine parse_result_line(const std::string& line, const ArithmeticContext& ctx);

}  // namespace orbits
