#include "orbits/topology.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "orbits/taylor.hpp"

namespace orbits {

namespace {

// Twice the oriented area of the triangle r1 r2 r3.
template <typename Vec>
Real twice_area(const Vec& u) {
  return (u(x_index(1)) - u(x_index(0))) * (u(y_index(2)) - u(y_index(0))) -
         (u(y_index(1)) - u(y_index(0))) * (u(x_index(2)) - u(x_index(0)));
}

template <typename Vec>
Real twice_area_rate(const Vec& u) {
  const Real ax = u(x_index(1)) - u(x_index(0)), ay = u(y_index(1)) - u(y_index(0));
  const Real bx = u(x_index(2)) - u(x_index(0)), by = u(y_index(2)) - u(y_index(0));
  const Real vax = u(vx_index(1)) - u(vx_index(0)), vay = u(vy_index(1)) - u(vy_index(0));
  const Real vbx = u(vx_index(2)) - u(vx_index(0)), vby = u(vy_index(2)) - u(vy_index(0));
  return vax * by + ax * vby - vay * bx - ay * vbx;
}

// Body (1-based) lying strictly between the other two of a collinear
// configuration, and the crossing sign.
template <typename Vec>
SyzygyEvent classify_event(const Vec& u, const Real& t, const Real& eps) {
  int far_i = 0, far_j = 1;
  Real far = distance_squared<Real>(u, 0, 1);
  for (int p = 1; p < 3; ++p) {
    const Real d = distance_squared<Real>(u, kPairs[p].first, kPairs[p].second);
    if (d > far) {
      far = d;
      far_i = kPairs[p].first;
      far_j = kPairs[p].second;
    }
  }
  const int mid = 3 - far_i - far_j;
  const Real lambda = ((u(x_index(mid)) - u(x_index(far_i))) * (u(x_index(far_j)) - u(x_index(far_i))) +
                       (u(y_index(mid)) - u(y_index(far_i))) * (u(y_index(far_j)) - u(y_index(far_i)))) /
                      far;
  if (!(lambda > eps) || !(lambda < 1 - eps)) {
    throw AmbiguousTopology("no body strictly between the others at t = " + format_decimal(t, 20));
  }
  const Real rate = twice_area_rate(u);
  if (rate.is_zero()) throw AmbiguousTopology("tangential collinearity at t = " + format_decimal(t, 20));
  return SyzygyEvent{t, mid + 1, rate.sign() > 0 ? 1 : -1};
}

class SyzygyObserver : public StepObserver<Real> {
 public:
  SyzygyObserver(int samples, const ArithmeticContext& ctx)
      : samples_(samples),
        area_tol_(pow10(-ctx.digits() / 2, ctx.zero())),
        eps_(pow10(-ctx.digits() / 4, ctx.zero())),
        buffer_(VecX<Real>::Constant(kStateDim, ctx.zero())),
        max_bisections_(static_cast<int>(ctx.bits())) {}

  void observe(const TaylorStep<Real>& step) override {
    Real prev_tau = zero_like(step.h);
    Real prev_area = area_at(step, prev_tau);
    for (int k = 1; k <= samples_; ++k) {
      const Real tau = step.h * k / samples_;
      const Real area = area_at(step, tau);
      if (area.is_zero()) {
        record(step, tau);
      } else if (!prev_area.is_zero() && area.sign() != prev_area.sign()) {
        record(step, bisect(step, prev_tau, prev_area, tau));
      }
      prev_tau = tau;
      prev_area = area;
    }
  }

  std::vector<SyzygyEvent> events;

 private:
  Real area_at(const TaylorStep<Real>& step, const Real& tau) {
    step.eval_into(tau, buffer_, kStateDim);
    return twice_area(buffer_);
  }

  Real bisect(const TaylorStep<Real>& step, Real lo, Real lo_area, Real hi) {
    for (int it = 0; it < max_bisections_; ++it) {
      const Real mid = (lo + hi) / 2;
      const Real area = area_at(step, mid);
      if (abs(area) < area_tol_) return mid;
      if (area.sign() == lo_area.sign()) {
        lo = mid;
        lo_area = area;
      } else {
        hi = mid;
      }
    }
    return (lo + hi) / 2;
  }

  void record(const TaylorStep<Real>& step, const Real& tau) {
    step.eval_into(tau, buffer_, kStateDim);
    events.push_back(classify_event(buffer_, step.t0 + tau, eps_));
  }

  int samples_;
  Real area_tol_;
  Real eps_;
  VecX<Real> buffer_;
  int max_bisections_;
};

Word apply(const Word& w, const std::array<int, 3>& perm, bool reverse) {
  Word out;
  out.reserve(w.size());
  for (const Letter& l : w) out.push_back({perm[l.middle - 1], reverse ? -l.sign : l.sign});
  if (reverse) std::reverse(out.begin(), out.end());
  return out;
}

bool key_less(const Word& a, const Word& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](const Letter& x, const Letter& y) { return x.key() < y.key(); });
}

std::string free_reduce_f2(const std::string& letters) {
  std::string out;
  for (char c : letters) {
    if (!out.empty() && out.back() != c && std::tolower(out.back()) == std::tolower(c)) {
      out.pop_back();
    } else {
      out.push_back(c);
    }
  }
  std::size_t lo = 0, hi = out.size();
  while (hi - lo >= 2 && out[lo] != out[hi - 1] && std::tolower(out[lo]) == std::tolower(out[hi - 1])) {
    ++lo;
    --hi;
  }
  return out.substr(lo, hi - lo);
}

}  // namespace

std::vector<SyzygyEvent> detect_syzygies(const VelocityPair<Real>& v, const Real& T, const PrecisionConfig& cfg,
                                         const SyzygyOptions& opts) {
  const ArithmeticContext ctx = cfg.context();
  const State<Real> start = initial_state(v);
  SyzygyObserver observer(opts.samples_per_step, ctx);
  StepObserver<Real>* observers[] = {&observer};
  const auto out = integrate(start, T, cfg, observers);
  if (!out.ok()) {
    throw AmbiguousTopology(std::string("orbit integration failed: ") + to_string(out.status));
  }

  const Real merge_tol = pow10(-ctx.digits() / 4, ctx.zero());
  std::vector<SyzygyEvent> events;
  events.push_back(classify_event(start.u, start.t, merge_tol));
  auto found = std::move(observer.events);
  std::stable_sort(found.begin(), found.end(), [](const SyzygyEvent& a, const SyzygyEvent& b) { return a.t < b.t; });
  for (auto& e : found) {
    if (!(e.t < T - merge_tol)) continue;  // same crossing as the one at t = 0
    if (!(e.t - events.back().t > merge_tol)) continue;
    events.push_back(std::move(e));
  }
  return events;
}

Word to_word(const std::vector<SyzygyEvent>& events) {
  Word w;
  w.reserve(events.size());
  for (const auto& e : events) w.push_back({e.middle, e.sign});
  return w;
}

Word free_reduce(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (const Letter& l : w) {
    if (!out.empty() && out.back() == l.inverse()) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  return out;
}

Word cyclic_reduce(const Word& w) {
  std::size_t lo = 0, hi = w.size();
  while (hi - lo >= 2 && w[lo] == w[hi - 1].inverse()) {
    ++lo;
    --hi;
  }
  return Word(w.begin() + static_cast<std::ptrdiff_t>(lo), w.begin() + static_cast<std::ptrdiff_t>(hi));
}

Word canonical_signature(const Word& w, bool include_reversal) {
  if (w.empty()) return w;
  std::array<int, 3> perm{1, 2, 3};
  Word best;
  bool have = false;
  do {
    for (int rev = 0; rev <= (include_reversal ? 1 : 0); ++rev) {
      Word img = apply(w, perm, rev == 1);
      for (std::size_t r = 0; r < img.size(); ++r) {
        if (!have || key_less(img, best)) {
          best = img;
          have = true;
        }
        std::rotate(img.begin(), img.begin() + 1, img.end());
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string to_f2_word(const Word& w) {
  std::string letters;
  for (const Letter& l : w) {
    switch (l.middle) {
      case 1:
        letters += l.sign > 0 ? "a" : "A";
        break;
      case 2:
        letters += l.sign > 0 ? "b" : "B";
        break;
      default:
        letters += l.sign > 0 ? "BA" : "ab";
        break;
    }
  }
  return free_reduce_f2(letters);
}

SatelliteInfo is_satellite(const Word& w) {
  SatelliteInfo info;
  const std::size_t n = w.size();
  for (std::size_t d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    bool periodic = true;
    for (std::size_t i = d; i < n && periodic; ++i) periodic = w[i] == w[i - d];
    if (periodic) {
      info.satellite = true;
      info.root.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
      info.power = static_cast<int>(n / d);
      return info;
    }
  }
  return info;
}

Signature make_signature(const Word& raw, bool include_reversal) {
  Signature s;
  s.raw = raw;
  s.reduced = free_reduce(raw);
  s.cyclic = cyclic_reduce(s.reduced);
  s.canonical = canonical_signature(s.cyclic, include_reversal);
  s.word_length = static_cast<int>(s.reduced.size());
  return s;
}

std::string format_word(const Word& w) {
  std::string out;
  for (const Letter& l : w) {
    out += static_cast<char>('0' + l.middle);
    out += l.sign > 0 ? '+' : '-';
  }
  return out;
}

Word parse_word(std::string_view text) {
  if (text.size() % 2 != 0) throw std::invalid_argument("signature text must be pairs of body and sign");
  Word w;
  for (std::size_t i = 0; i < text.size(); i += 2) {
    const char b = text[i], s = text[i + 1];
    if (b < '1' || b > '3' || (s != '+' && s != '-')) {
      throw std::invalid_argument("bad signature letter at position " + std::to_string(i));
    }
    w.push_back({b - '0', s == '+' ? 1 : -1});
  }
  return w;
}

}  // namespace orbits
