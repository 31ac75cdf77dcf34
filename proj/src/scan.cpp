#include "orbits/scan.hpp"

#include <istream>
#include <map>

#include "text_util.hpp"

namespace orbits {

namespace {

Real infinity_like(const ArithmeticContext& ctx) {
  Real r = ctx.zero();
  mpfr_set_inf(r.get(), 1);
  return r;
}

Real parse_value(const std::string& s, const ArithmeticContext& ctx) {
  if (s == "inf") return infinity_like(ctx);
  return parse_decimal(s, ctx);
}

int axis_count(const std::string& lo, const std::string& hi, const std::string& step, const ArithmeticContext& ctx) {
  const Real span = (ctx.parse(hi) - ctx.parse(lo)) / ctx.parse(step);
  // tolerate a representation error just below an integer
  const Real slack = pow10(-ctx.digits() / 2, ctx.zero());
  return static_cast<int>((span + slack).to_long_floor()) + 1;
}

class ProximityObserver : public StepObserver<Real> {
 public:
  ProximityObserver(const Vec12<Real>& start, int samples)
      : start_(start), samples_(samples), buffer_(VecX<Real>::Constant(kStateDim, zero_like(start(0)))) {
    best_sq_ = zero_like(start(0));
    mpfr_set_inf(best_sq_.get(), 1);
    best_t_ = zero_like(start(0));
  }

  void observe(const TaylorStep<Real>& step) override {
    for (int k = 0; k <= samples_; ++k) {
      const Real tau = step.h * k / samples_;
      const Real t = step.t0 + tau;
      if (!(t > 1)) continue;
      step.eval_into(tau, buffer_, kStateDim);
      Real sq = zero_like(tau);
      for (int c = 0; c < kStateDim; ++c) {
        const Real d = buffer_(c) - start_(c);
        sq += d * d;
      }
      if (sq < best_sq_) {
        best_sq_ = sq;
        best_t_ = t;
      }
    }
  }

  const Real& best_sq() const { return best_sq_; }
  const Real& best_t() const { return best_t_; }

 private:
  Vec12<Real> start_;
  int samples_;
  VecX<Real> buffer_;
  Real best_sq_;
  Real best_t_;
};

}  // namespace

void GridSpec::validate(const ArithmeticContext& ctx) const {
  const Real lo_x = ctx.parse(vx_lo), hi_x = ctx.parse(vx_hi);
  const Real lo_y = ctx.parse(vy_lo), hi_y = ctx.parse(vy_hi);
  const Real h = ctx.parse(step);
  if (!(h > 0)) throw std::invalid_argument("grid step must be positive");
  if (lo_x < 0 || lo_y < 0 || hi_x > 1 || hi_y > 1 || hi_x < lo_x || hi_y < lo_y) {
    throw std::invalid_argument("grid window must be a rectangle inside [0,1]^2");
  }
}

int GridSpec::nx(const ArithmeticContext& ctx) const { return axis_count(vx_lo, vx_hi, step, ctx); }
int GridSpec::ny(const ArithmeticContext& ctx) const { return axis_count(vy_lo, vy_hi, step, ctx); }
Real GridSpec::vx_at(int i, const ArithmeticContext& ctx) const { return ctx.parse(vx_lo) + ctx.parse(step) * i; }
Real GridSpec::vy_at(int j, const ArithmeticContext& ctx) const { return ctx.parse(vy_lo) + ctx.parse(step) * j; }

const char* to_string(CellOutcome o) {
  switch (o) {
    case CellOutcome::ok:
      return "ok";
    case CellOutcome::collision:
      return "collision";
    case CellOutcome::step_underflow:
      return "step_underflow";
    case CellOutcome::step_limit:
      return "step_limit";
  }
  return "unknown";
}

CellOutcome cell_outcome_from_string(const std::string& s) {
  for (auto o : {CellOutcome::ok, CellOutcome::collision, CellOutcome::step_underflow, CellOutcome::step_limit}) {
    if (s == to_string(o)) return o;
  }
  throw text::FormatError("unknown scan outcome '" + s + "'");
}

ScanCell scan_point(const VelocityPair<Real>& v, const Real& T0, const PrecisionConfig& cfg, int samples_per_step) {
  if (!(T0 > 1)) throw std::invalid_argument("scan_point: T0 must exceed 1");
  if (samples_per_step < 1) throw std::invalid_argument("scan_point: need at least one sample per step");
  const State<Real> start = initial_state(v);
  ProximityObserver observer(start.u, samples_per_step);
  StepObserver<Real>* observers[] = {&observer};
  const auto out = integrate(start, T0, cfg, observers);

  ScanCell cell{v, zero_like(v.vx), zero_like(v.vx), CellOutcome::ok};
  switch (out.status) {
    case IntegrationStatus::reached_end:
      cell.p_min = sqrt(observer.best_sq());
      cell.t_argmin = observer.best_t();
      return cell;
    case IntegrationStatus::collision:
      cell.outcome = CellOutcome::collision;
      break;
    case IntegrationStatus::step_underflow:
      cell.outcome = CellOutcome::step_underflow;
      break;
    case IntegrationStatus::step_limit:
      cell.outcome = CellOutcome::step_limit;
      break;
  }
  mpfr_set_inf(cell.p_min.get(), 1);
  cell.t_argmin = out.final.t;
  return cell;
}

std::vector<CandidateTriplet> find_candidates(const ScanGrid& grid, const Real& threshold) {
  if (static_cast<std::size_t>(grid.nx) * grid.ny != grid.cells.size()) {
    throw std::invalid_argument("find_candidates: grid is not complete");
  }
  std::vector<CandidateTriplet> out;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const ScanCell& c = grid.at(i, j);
      if (c.outcome != CellOutcome::ok || !(c.p_min < threshold)) continue;
      bool strict_min = true;
      for (int dj = -1; dj <= 1 && strict_min; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= grid.nx || nj >= grid.ny) continue;
          if (!(c.p_min < grid.at(ni, nj).p_min)) {
            strict_min = false;
            break;
          }
        }
      }
      if (strict_min) out.push_back({c.v.vx, c.v.vy, c.t_argmin, c.p_min});
    }
  }
  return out;
}

std::string format_scan_header(const ScanFileHeader& h) {
  return "# scan vx_lo=" + h.grid.vx_lo + " vx_hi=" + h.grid.vx_hi + " vy_lo=" + h.grid.vy_lo +
         " vy_hi=" + h.grid.vy_hi + " step=" + h.grid.step + " shard=" + std::to_string(h.shard_index) + "/" +
         std::to_string(h.shard_count);
}

ScanFileHeader parse_scan_header(const std::string& line) {
  const auto f = text::header_fields(line, "scan");
  ScanFileHeader h;
  h.grid.vx_lo = text::require(f, "vx_lo");
  h.grid.vx_hi = text::require(f, "vx_hi");
  h.grid.vy_lo = text::require(f, "vy_lo");
  h.grid.vy_hi = text::require(f, "vy_hi");
  h.grid.step = text::require(f, "step");
  const auto shard = text::parse_shard(text::require(f, "shard"));
  h.shard_index = shard.first;
  h.shard_count = shard.second;
  return h;
}

std::string format_scan_cell(const ScanCell& c, int digits) {
  return format_decimal(c.v.vx, digits) + " " + format_decimal(c.v.vy, digits) + " " +
         format_decimal(c.p_min, digits) + " " + format_decimal(c.t_argmin, digits) + " " + to_string(c.outcome);
}

ScanCell parse_scan_cell(const std::string& line, const ArithmeticContext& ctx) {
  const auto t = text::tokens(line);
  if (t.size() != 5) throw text::FormatError("scan cell needs 5 fields: " + line);
  return ScanCell{{ctx.parse(t[0]), ctx.parse(t[1])}, parse_value(t[2], ctx), parse_value(t[3], ctx),
                  cell_outcome_from_string(t[4])};
}

ScanGrid read_scan_grid(std::istream& in, const ArithmeticContext& ctx, GridSpec* spec_out) {
  std::string line;
  if (!std::getline(in, line)) throw text::FormatError("empty scan file");
  const ScanFileHeader header = parse_scan_header(line);
  ScanGrid grid;
  grid.nx = header.grid.nx(ctx);
  grid.ny = header.grid.ny(ctx);
  if (header.shard_count != 1) {
    throw text::FormatError("scan file is shard " + std::to_string(header.shard_index) + "/" +
                            std::to_string(header.shard_count) + "; merge the shards first");
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      grid.cells.push_back(parse_scan_cell(line, ctx));
    } catch (const std::exception& e) {
      throw text::FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (grid.cells.size() != static_cast<std::size_t>(grid.nx) * grid.ny) {
    throw text::FormatError("scan file has " + std::to_string(grid.cells.size()) + " cells, expected " +
                            std::to_string(grid.nx * grid.ny));
  }
  if (spec_out) *spec_out = header.grid;
  return grid;
}

std::string format_candidate(const CandidateTriplet& c, int digits) {
  return format_decimal(c.vx, digits) + " " + format_decimal(c.vy, digits) + " " + format_decimal(c.T, digits) +
         " " + format_decimal(c.p_min, digits);
}

CandidateTriplet parse_candidate(const std::string& line, const ArithmeticContext& ctx) {
  const auto t = text::tokens(line);
  if (t.size() != 4) throw text::FormatError("candidate needs 4 fields (vx vy T p_min): " + line);
  return {ctx.parse(t[0]), ctx.parse(t[1]), ctx.parse(t[2]), parse_value(t[3], ctx)};
}

}  // namespace orbits
