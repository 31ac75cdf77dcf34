#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "orbits/scan.hpp"
#include "test_support.hpp"

using namespace orbits;

namespace {

PrecisionConfig quick_config() { return make_config(24, 28, "1e-20"); }

// nx*ny grid of ok cells with the given proximities (row-major).
ScanGrid synthetic(int nx, int ny, const std::vector<double>& p, const ArithmeticContext& ctx) {
  ScanGrid g;
  g.nx = nx;
  g.ny = ny;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      ScanCell c{{ctx.from_long(i), ctx.from_long(j)}, from_double_like(ctx.zero(), p[j * nx + i]),
                 ctx.from_long(5), CellOutcome::ok};
      g.cells.push_back(c);
    }
  }
  return g;
}

// Reference local-minimum rule written directly over doubles.
std::vector<int> reference_minima(int nx, int ny, const std::vector<double>& p, double threshold,
                                  const std::vector<bool>& failed) {
  std::vector<int> out;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      if (failed[k] || !(p[k] < threshold)) continue;
      bool ok = true;
      for (int nj = std::max(0, j - 1); nj <= std::min(ny - 1, j + 1); ++nj) {
        for (int ni = std::max(0, i - 1); ni <= std::min(nx - 1, i + 1); ++ni) {
          if ((ni != i || nj != j) && !failed[nj * nx + ni] && p[nj * nx + ni] <= p[k]) ok = false;
        }
      }
      out.push_back(ok ? k : -1);
    }
  }
  std::erase(out, -1);
  return out;
}

}  // namespace

TEST_CASE("full-scale grid has 1639 points per axis at step 1/2048") {
  const ArithmeticContext ctx = make_context(40);
  const GridSpec g;
  g.validate(ctx);
  CHECK(g.nx(ctx) == 1639);
  CHECK(g.ny(ctx) == 1639);
  // 0.8 is not a multiple of 1/2048; the last point is 1638/2048
  CHECK(g.vx_at(1638, ctx) == ctx.parse("0.7998046875"));
  CHECK(g.vy_at(1, ctx) == ctx.parse("0.00048828125"));
}

TEST_CASE("grid window validation") {
  const ArithmeticContext ctx = make_context(20);
  GridSpec g;
  g.step = "0";
  CHECK_THROWS(g.validate(ctx));
  g = GridSpec{};
  g.vx_hi = "1.2";
  CHECK_THROWS(g.validate(ctx));
  g = GridSpec{};
  g.vy_lo = "0.9";
  CHECK_THROWS(g.validate(ctx));
  g = GridSpec{"0.1", "0.1", "0.2", "0.3", "0.05"};
  g.validate(ctx);
  CHECK(g.nx(ctx) == 1);
  CHECK(g.ny(ctx) == 3);
}

TEST_CASE("a single interior minimum below threshold is a candidate") {
  const ArithmeticContext ctx = make_context(20);
  std::vector<double> p(25, 0.9);
  p[2 * 5 + 3] = 0.5;
  const auto c = find_candidates(synthetic(5, 5, p, ctx), ctx.parse("0.7"));
  REQUIRE(c.size() == 1);
  CHECK(c[0].vx.to_double() == 3);
  CHECK(c[0].vy.to_double() == 2);
  CHECK(c[0].T.to_double() == 5);
  CHECK(c[0].p_min.to_double() == doctest::Approx(0.5));
}

TEST_CASE("a flat plateau below threshold yields no candidate") {
  const ArithmeticContext ctx = make_context(20);
  const std::vector<double> p(16, 0.3);
  CHECK(find_candidates(synthetic(4, 4, p, ctx), ctx.parse("0.7")).empty());
}

TEST_CASE("a cell with a smaller neighbour is not a candidate") {
  const ArithmeticContext ctx = make_context(20);
  std::vector<double> p(9, 0.9);
  p[4] = 0.69;
  p[8] = 0.68;  // diagonal neighbour
  const auto c = find_candidates(synthetic(3, 3, p, ctx), ctx.parse("0.7"));
  REQUIRE(c.size() == 1);
  CHECK(c[0].vx.to_double() == 2);
  CHECK(c[0].vy.to_double() == 2);
}

TEST_CASE("minima at or above the threshold are not candidates") {
  const ArithmeticContext ctx = make_context(20);
  std::vector<double> p(9, 0.9);
  p[4] = 0.75;
  CHECK(find_candidates(synthetic(3, 3, p, ctx), ctx.parse("0.75")).empty());
  CHECK(find_candidates(synthetic(3, 3, p, ctx), ctx.parse("0.7500001")).size() == 1);
}

TEST_CASE("failed cells never become candidates and do not block neighbours") {
  const ArithmeticContext ctx = make_context(20);
  std::vector<double> p(9, 0.9);
  p[4] = 0.2;
  ScanGrid g = synthetic(3, 3, p, ctx);
  g.cells[0].outcome = CellOutcome::collision;
  mpfr_set_inf(g.cells[0].p_min.get(), 1);
  CHECK(find_candidates(g, ctx.parse("0.7")).size() == 1);
  g.cells[4].outcome = CellOutcome::step_underflow;
  mpfr_set_inf(g.cells[4].p_min.get(), 1);
  CHECK(find_candidates(g, ctx.parse("0.7")).empty());
}

TEST_CASE("random grids: candidates match a reference rule and grow with the threshold") {
  const ArithmeticContext ctx = make_context(20);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 9), coarse(0, 7);
  for (int trial = 0; trial < 300; ++trial) {
    const int nx = dim(rng), ny = dim(rng);
    std::vector<double> p(static_cast<std::size_t>(nx * ny));
    std::vector<bool> failed(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      // coarse values produce ties, which must never yield candidates
      p[k] = trial % 2 ? coarse(rng) / 8.0 : u(rng);
      failed[k] = u(rng) < 0.1;
    }
    ScanGrid g = synthetic(nx, ny, p, ctx);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!failed[k]) continue;
      g.cells[k].outcome = CellOutcome::collision;
      mpfr_set_inf(g.cells[k].p_min.get(), 1);
    }
    std::size_t previous = 0;
    for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9, 1.1}) {
      const auto got = find_candidates(g, from_double_like(ctx.zero(), thr));
      const auto want = reference_minima(nx, ny, p, thr, failed);
      REQUIRE(got.size() == want.size());
      for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k].vx.to_double() == want[k] % nx);
        CHECK(got[k].vy.to_double() == want[k] / nx);
      }
      CHECK(got.size() >= previous);
      previous = got.size();
    }
  }
}

TEST_CASE("incomplete grids are rejected") {
  const ArithmeticContext ctx = make_context(20);
  ScanGrid g = synthetic(3, 3, std::vector<double>(9, 0.5), ctx);
  g.cells.pop_back();
  CHECK_THROWS_AS(find_candidates(g, ctx.parse("0.7")), std::invalid_argument);
}

TEST_CASE("the proximity minimum ignores t <= 1") {
  const PrecisionConfig cfg = quick_config();
  const ArithmeticContext ctx = cfg.context();
  const auto v = test::velocity(ctx, "0.2", "0.3");
  const ScanCell c = scan_point(v, ctx.parse("3"), cfg);
  REQUIRE(c.outcome == CellOutcome::ok);
  CHECK(c.t_argmin > 1);
  CHECK(c.t_argmin <= 3);
  // the state at t = 0.01 is far closer to the start than anything after t = 1
  const auto early = integrate(initial_state(v), ctx.parse("0.01"), cfg);
  REQUIRE(early.ok());
  CHECK(proximity(early.final, initial_state(v)) < c.p_min);
}

TEST_CASE("the recorded minimum is the proximity at its argmin") {
  const PrecisionConfig cfg = quick_config();
  const ArithmeticContext ctx = cfg.context();
  const auto v = test::velocity(ctx, "0.3471", "0.5327");
  const ScanCell c = scan_point(v, ctx.parse("8"), cfg);
  REQUIRE(c.outcome == CellOutcome::ok);
  // near the figure-eight the return is close and happens near its period
  CHECK(c.p_min < ctx.parse("0.01"));
  CHECK(std::abs(c.t_argmin.to_double() - 6.3259) < 0.05);

  const auto at = integrate(initial_state(v), c.t_argmin, cfg);
  REQUIRE(at.ok());
  CHECK(test::rel_log10(proximity(at.final, initial_state(v)), c.p_min) < -15);

  // finer sampling can only find a minimum that is as small or smaller, and close
  const ScanCell fine = scan_point(v, ctx.parse("8"), cfg, 32);
  CHECK(fine.p_min <= c.p_min);
  CHECK(std::abs(fine.p_min.to_double() - c.p_min.to_double()) < 1e-3 * c.p_min.to_double());
}

TEST_CASE("a colliding trajectory reports an infinite minimum") {
  const PrecisionConfig cfg = quick_config();
  const ArithmeticContext ctx = cfg.context();
  const ScanCell c = scan_point(test::velocity(ctx, "0", "0"), ctx.parse("10"), cfg);
  CHECK(c.outcome != CellOutcome::ok);
  CHECK(c.p_min.is_inf());
  CHECK(c.t_argmin < 10);
  ScanGrid g;
  g.nx = g.ny = 1;
  g.cells.push_back(c);
  CHECK(find_candidates(g, ctx.parse("0.7")).empty());
}

TEST_CASE("scan_point is deterministic") {
  const PrecisionConfig cfg = quick_config();
  const ArithmeticContext ctx = cfg.context();
  const auto v = test::velocity(ctx, "0.41", "0.27");
  const ScanCell a = scan_point(v, ctx.parse("4"), cfg);
  const ScanCell b = scan_point(v, ctx.parse("4"), cfg);
  CHECK(format_scan_cell(a, 40) == format_scan_cell(b, 40));
}

TEST_CASE("scan_point rejects bad arguments") {
  const PrecisionConfig cfg = quick_config();
  const ArithmeticContext ctx = cfg.context();
  const auto v = test::velocity(ctx, "0.41", "0.27");
  CHECK_THROWS_AS(scan_point(v, ctx.parse("1"), cfg), std::invalid_argument);
  CHECK_THROWS_AS(scan_point(v, ctx.parse("4"), cfg, 0), std::invalid_argument);
}

TEST_CASE("scan file text round trip") {
  const ArithmeticContext ctx = make_context(30);
  const ScanFileHeader h{GridSpec{"0.1", "0.2", "0.3", "0.4", "0.05"}, 2, 5};
  const std::string line = format_scan_header(h);
  CHECK(line == "# scan vx_lo=0.1 vx_hi=0.2 vy_lo=0.3 vy_hi=0.4 step=0.05 shard=2/5");
  const ScanFileHeader back = parse_scan_header(line);
  CHECK(back.grid == h.grid);
  CHECK(back.shard_index == 2);
  CHECK(back.shard_count == 5);
  CHECK_THROWS(parse_scan_header("# scan vx_lo=0.1 vx_hi=0.2 vy_lo=0.3 vy_hi=0.4 step=0.05"));
  CHECK_THROWS(parse_scan_header("# candidates shard=0/1"));

  ScanCell c{test::velocity(ctx, "0.125", "0.5"), ctx.parse("0.0123456789012345678901"), ctx.parse("6.5"),
             CellOutcome::ok};
  const ScanCell c2 = parse_scan_cell(format_scan_cell(c, 30), ctx);
  CHECK(c2.p_min == c.p_min);
  CHECK(c2.v.vx == c.v.vx);
  CHECK(c2.outcome == CellOutcome::ok);

  mpfr_set_inf(c.p_min.get(), 1);
  c.outcome = CellOutcome::collision;
  const std::string failed = format_scan_cell(c, 30);
  CHECK(failed.find("inf") != std::string::npos);
  const ScanCell c3 = parse_scan_cell(failed, ctx);
  CHECK(c3.p_min.is_inf());
  CHECK(c3.outcome == CellOutcome::collision);
  CHECK_THROWS(parse_scan_cell("0.1 0.2 0.3", ctx));
  CHECK_THROWS(parse_scan_cell("0.1 0.2 0.3 0.4 exploded", ctx));
}

TEST_CASE("read_scan_grid needs a complete unsharded file") {
  const ArithmeticContext ctx = make_context(20);
  const GridSpec spec{"0.1", "0.2", "0.3", "0.3", "0.05"};  // 3 x 1
  std::string body;
  for (int i = 0; i < 3; ++i) {
    const ScanCell c{{spec.vx_at(i, ctx), spec.vy_at(0, ctx)}, ctx.parse("0.5"), ctx.parse("2"), CellOutcome::ok};
    body += format_scan_cell(c, 20) + "\n";
  }
  {
    std::istringstream in(format_scan_header({spec, 0, 1}) + "\n" + body);
    GridSpec got;
    const ScanGrid g = read_scan_grid(in, ctx, &got);
    CHECK(g.nx == 3);
    CHECK(g.ny == 1);
    CHECK(got == spec);
  }
  {
    std::istringstream in(format_scan_header({spec, 0, 2}) + "\n" + body);
    CHECK_THROWS(read_scan_grid(in, ctx));
  }
  {
    std::istringstream in(format_scan_header({spec, 0, 1}) + "\n" + body.substr(0, body.rfind('\n', body.size() - 2) + 1));
    CHECK_THROWS(read_scan_grid(in, ctx));
  }
}

TEST_CASE("candidate line round trip") {
  const ArithmeticContext ctx = make_context(30);
  const CandidateTriplet c{ctx.parse("0.3"), ctx.parse("0.5"), ctx.parse("6.25"), ctx.parse("0.001")};
  const CandidateTriplet back = parse_candidate(format_candidate(c, 30), ctx);
  CHECK(back.vx == c.vx);
  CHECK(back.vy == c.vy);
  CHECK(back.T == c.T);
  CHECK(back.p_min == c.p_min);
  CHECK_THROWS(parse_candidate("0.3 0.5 6.25", ctx));
}
