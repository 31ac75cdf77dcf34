#pragma once

// Planar equal-mass three-body problem in first-order form, G = m = 1.
//
// Phase-space layout (fixed everywhere, including files):
//   u = (x1, y1, vx1, vy1, x2, y2, vx2, vy2, x3, y3, vx3, vy3)
// The extended state appends du/dvx and du/dvy, 36 components in total.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "orbits/real.hpp"

namespace orbits {

inline constexpr int kBodies = 3;
inline constexpr int kStateDim = 12;
inline constexpr int kExtDim = 36;

constexpr int x_index(int body) { return 4 * body; }
constexpr int y_index(int body) { return 4 * body + 1; }
constexpr int vx_index(int body) { return 4 * body + 2; }
constexpr int vy_index(int body) { return 4 * body + 3; }

// Pairs (i<j) in recurrence order.
inline constexpr std::array<std::pair<int, int>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};

template <typename Scalar>
using Vec12 = Eigen::Matrix<Scalar, kStateDim, 1>;
template <typename Scalar>
using Vec36 = Eigen::Matrix<Scalar, kExtDim, 1>;
template <typename Scalar>
using Mat12 = Eigen::Matrix<Scalar, kStateDim, kStateDim>;

class SingularityError : public std::domain_error {
 public:
  SingularityError(int body_a, int body_b)
      : std::domain_error("collision between bodies " + std::to_string(body_a + 1) + " and " +
                          std::to_string(body_b + 1)),
        pair_{body_a, body_b} {}
  std::pair<int, int> pair() const { return pair_; }

 private:
  std::pair<int, int> pair_;
};

template <typename Scalar>
struct VelocityPair {
  Scalar vx;
  Scalar vy;
};

template <typename Scalar>
struct State {
  Scalar t;
  Vec12<Scalar> u;
};

template <typename Scalar>
struct ExtState {
  Scalar t;
  Vec36<Scalar> w;

  auto base() const { return w.template head<kStateDim>(); }
  auto d_vx() const { return w.template segment<kStateDim>(kStateDim); }
  auto d_vy() const { return w.template segment<kStateDim>(2 * kStateDim); }
};

// Squared distance between bodies a and b.
template <typename Scalar, typename Derived>
Scalar distance_squared(const Eigen::MatrixBase<Derived>& u, int a, int b) {
  const Scalar dx = u(x_index(b)) - u(x_index(a));
  const Scalar dy = u(y_index(b)) - u(y_index(a));
  return dx * dx + dy * dy;
}

/// Symmetric configuration: bodies at (-1,0), (1,0), (0,0); bodies 1 and 2
/// move with (vx, vy), body 3 with (-2vx, -2vy). Zero momentum and zero
/// angular momentum by construction.
template <typename Scalar>
State<Scalar> initial_state(const VelocityPair<Scalar>& v) {
  State<Scalar> s;
  s.t = zero_like(v.vx);
  s.u.setConstant(zero_like(v.vx));
  s.u(x_index(0)) = s.u(x_index(0)) - 1;
  s.u(x_index(1)) = s.u(x_index(1)) + 1;
  s.u(vx_index(0)) = v.vx;
  s.u(vy_index(0)) = v.vy;
  s.u(vx_index(1)) = v.vx;
  s.u(vy_index(1)) = v.vy;
  s.u(vx_index(2)) = v.vx * -2;
  s.u(vy_index(2)) = v.vy * -2;
  return s;
}

/// Sensitivities of initial_state with respect to vx and vy, as the tail of an
/// extended state at t = 0.
template <typename Scalar>
ExtState<Scalar> initial_ext_state(const VelocityPair<Scalar>& v) {
  const State<Scalar> s = initial_state(v);
  ExtState<Scalar> e;
  e.t = s.t;
  e.w.setConstant(zero_like(v.vx));
  e.w.template head<kStateDim>() = s.u;
  for (int b = 0; b < kBodies; ++b) {
    const long weight = b == 2 ? -2 : 1;
    e.w(kStateDim + vx_index(b)) = e.w(kStateDim + vx_index(b)) + weight;
    e.w(2 * kStateDim + vy_index(b)) = e.w(2 * kStateDim + vy_index(b)) + weight;
  }
  return e;
}

template <typename Scalar, typename Derived>
Vec12<Scalar> rhs(const Eigen::MatrixBase<Derived>& u) {
  using std::sqrt;
  Vec12<Scalar> f;
  f.setConstant(zero_like(u(0)));
  for (int b = 0; b < kBodies; ++b) {
    f(x_index(b)) = u(vx_index(b));
    f(y_index(b)) = u(vy_index(b));
  }
  for (const auto& [i, j] : kPairs) {
    const Scalar dx = u(x_index(j)) - u(x_index(i));
    const Scalar dy = u(y_index(j)) - u(y_index(i));
    const Scalar d2 = dx * dx + dy * dy;
    if (d2 == 0) throw SingularityError(i, j);
    const Scalar inv_d3 = 1 / (d2 * sqrt(d2));
    const Scalar ax = dx * inv_d3;
    const Scalar ay = dy * inv_d3;
    f(vx_index(i)) += ax;
    f(vy_index(i)) += ay;
    f(vx_index(j)) -= ax;
    f(vy_index(j)) -= ay;
  }
  return f;
}

template <typename Scalar>
Vec12<Scalar> rhs(const State<Scalar>& s) {
  return rhs<Scalar>(s.u);
}

/// Analytic df/du. Acceleration blocks: d a_i / d r_j = I/d^3 - 3 dd^T/d^5
/// for j != i (d = r_j - r_i), and the diagonal block is minus their sum.
template <typename Scalar, typename Derived>
Mat12<Scalar> rhs_jacobian(const Eigen::MatrixBase<Derived>& u) {
  using std::sqrt;
  Mat12<Scalar> jac;
  jac.setConstant(zero_like(u(0)));
  for (int b = 0; b < kBodies; ++b) {
    jac(x_index(b), vx_index(b)) += 1;
    jac(y_index(b), vy_index(b)) += 1;
  }
  for (const auto& [i, j] : kPairs) {
    const Scalar dx = u(x_index(j)) - u(x_index(i));
    const Scalar dy = u(y_index(j)) - u(y_index(i));
    const Scalar d2 = dx * dx + dy * dy;
    if (d2 == 0) throw SingularityError(i, j);
    const Scalar inv_d3 = 1 / (d2 * sqrt(d2));
    const Scalar inv_d5 = inv_d3 / d2;
    // block K = d a_i / d r_j (symmetric); d a_j / d r_i is the same block.
    const Scalar kxx = inv_d3 - 3 * dx * dx * inv_d5;
    const Scalar kyy = inv_d3 - 3 * dy * dy * inv_d5;
    const Scalar kxy = -3 * dx * dy * inv_d5;
    const auto add_block = [&](int row_body, int col_body, int sign) {
      const int rx = vx_index(row_body), ry = vy_index(row_body);
      const int cx = x_index(col_body), cy = y_index(col_body);
      if (sign > 0) {
        jac(rx, cx) += kxx;
        jac(rx, cy) += kxy;
        jac(ry, cx) += kxy;
        jac(ry, cy) += kyy;
      } else {
        jac(rx, cx) -= kxx;
        jac(rx, cy) -= kxy;
        jac(ry, cx) -= kxy;
        jac(ry, cy) -= kyy;
      }
    };
    add_block(i, j, +1);
    add_block(j, i, +1);
    add_block(i, i, -1);
    add_block(j, j, -1);
  }
  return jac;
}

template <typename Scalar>
Mat12<Scalar> rhs_jacobian(const State<Scalar>& s) {
  return rhs_jacobian<Scalar>(s.u);
}

/// Base flow plus the variational equations for both parameter sensitivities.
template <typename Scalar>
Vec36<Scalar> extended_rhs(const ExtState<Scalar>& e) {
  const Vec12<Scalar> u = e.base();
  const Mat12<Scalar> jac = rhs_jacobian<Scalar>(u);
  Vec36<Scalar> out;
  out.template head<kStateDim>() = rhs<Scalar>(u);
  out.template segment<kStateDim>(kStateDim) = jac * e.d_vx();
  out.template segment<kStateDim>(2 * kStateDim) = jac * e.d_vy();
  return out;
}

/// Total energy, kinetic minus pairwise 1/d.
template <typename Scalar, typename Derived>
Scalar energy(const Eigen::MatrixBase<Derived>& u) {
  using std::sqrt;
  Scalar kinetic = zero_like(u(0));
  for (int b = 0; b < kBodies; ++b) {
    kinetic += u(vx_index(b)) * u(vx_index(b)) + u(vy_index(b)) * u(vy_index(b));
  }
  kinetic /= 2;
  Scalar potential = zero_like(u(0));
  for (const auto& [i, j] : kPairs) {
    const Scalar d2 = distance_squared<Scalar>(u, i, j);
    if (d2 == 0) throw SingularityError(i, j);
    potential += 1 / sqrt(d2);
  }
  return kinetic - potential;
}

template <typename Scalar>
Scalar energy(const State<Scalar>& s) {
  return energy<Scalar>(s.u);
}

template <typename Scalar, typename Derived>
Scalar angular_momentum(const Eigen::MatrixBase<Derived>& u) {
  Scalar l = zero_like(u(0));
  for (int b = 0; b < kBodies; ++b) {
    l += u(x_index(b)) * u(vy_index(b)) - u(y_index(b)) * u(vx_index(b));
  }
  return l;
}

template <typename Scalar>
Scalar angular_momentum(const State<Scalar>& s) {
  return angular_momentum<Scalar>(s.u);
}

/// Euclidean distance between two phase-space points (return proximity P).
template <typename Scalar>
Scalar proximity(const State<Scalar>& s, const State<Scalar>& ref) {
  using std::sqrt;
  Scalar sum = zero_like(s.u(0));
  for (int k = 0; k < kStateDim; ++k) {
    const Scalar d = s.u(k) - ref.u(k);
    sum += d * d;
  }
  return sqrt(sum);
}

/// Smallest pairwise distance of a configuration.
template <typename Scalar, typename Derived>
Scalar min_pair_distance(const Eigen::MatrixBase<Derived>& u) {
  using std::sqrt;
  Scalar best = distance_squared<Scalar>(u, 0, 1);
  for (int p = 1; p < 3; ++p) {
    const Scalar d2 = distance_squared<Scalar>(u, kPairs[p].first, kPairs[p].second);
    if (d2 < best) best = d2;
  }
  return sqrt(best);
}

template <typename Scalar>
Scalar initial_energy_formula(const VelocityPair<Scalar>& v) {
  return (v.vx * v.vx + v.vy * v.vy) * 3 - Scalar(5) / 2;
}

}  // namespace orbits
