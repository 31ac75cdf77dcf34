#pragma once

// Grid scan over initial velocities: each grid point is integrated to T0 and
// the minimum of the return proximity over 1 < t <= T0 is recorded. Local
// minima below a threshold become candidate triplets (vx, vy, T).

#include <iosfwd>
#include <string>
#include <vector>

#include "orbits/dynamics.hpp"
#include "orbits/precision.hpp"
#include "orbits/taylor.hpp"

namespace orbits {

/// Rectangular velocity grid. Bounds and step are kept as decimal strings so
/// shard headers compare exactly; grid points are vx_lo + i*step.
struct GridSpec {
  std::string vx_lo = "0";
  std::string vx_hi = "0.8";
  std::string vy_lo = "0";
  std::string vy_hi = "0.8";
  std::string step = "0.00048828125";  // 1/2048

  void validate(const ArithmeticContext& ctx) const;
  int nx(const ArithmeticContext& ctx) const;
  int ny(const ArithmeticContext& ctx) const;
  Real vx_at(int i, const ArithmeticContext& ctx) const;
  Real vy_at(int j, const ArithmeticContext& ctx) const;

  bool operator==(const GridSpec&) const = default;
};

enum class CellOutcome { ok, collision, step_underflow, step_limit };

const char* to_string(CellOutcome o);
CellOutcome cell_outcome_from_string(const std::string& s);

struct ScanCell {
  VelocityPair<Real> v;
  Real p_min;      // +inf unless outcome == ok
  Real t_argmin;
  CellOutcome outcome = CellOutcome::ok;
};

struct CandidateTriplet {
  Real vx;
  Real vy;
  Real T;
  Real p_min;
};

/// Rows run over vy, columns over vx; cells are row-major.
struct ScanGrid {
  int nx = 0;
  int ny = 0;
  std::vector<ScanCell> cells;

  const ScanCell& at(int i, int j) const { return cells[static_cast<std::size_t>(j) * nx + i]; }
};

/// Integrates initial_state(v) to T0, sampling every Taylor step densely at
/// samples_per_step+1 evenly spaced points, and keeps the smallest proximity
/// to the initial state among samples with t > 1.
ScanCell scan_point(const VelocityPair<Real>& v, const Real& T0, const PrecisionConfig& cfg,
                    int samples_per_step = 8);

/// Cells that are ok, below `threshold`, and strictly below every existing
/// 8-neighbour. Returned in row-major order.
std::vector<CandidateTriplet> find_candidates(const ScanGrid& grid, const Real& threshold);

// ---- files ------------------------------------------------------------------

// Shard k of K holds the grid rows j with j % K == k, in increasing j.
struct ScanFileHeader {
  GridSpec grid;
  int shard_index = 0;
  int shard_count = 1;
};

std::string format_scan_header(const ScanFileHeader& h);
ScanFileHeader parse_scan_header(const std::string& line);
std::string format_scan_cell(const ScanCell& c, int digits);
ScanCell parse_scan_cell(const std::string& line, const ArithmeticContext& ctx);

/// Reads a complete (single-shard or merged) scan file into a grid.
ScanGrid read_scan_grid(std::istream& in, const ArithmeticContext& ctx, GridSpec* spec_out = nullptr);

std::string format_candidate(const CandidateTriplet& c, int digits);
CandidateTriplet parse_candidate(const std::string& line, const ArithmeticContext& ctx);

}  // namespace orbits
