#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include "orbits/pipeline.hpp"
#include "test_support.hpp"

using namespace orbits;

namespace {

LineFile numbered(const std::string& first_header, int n) {
  LineFile f;
  f.header.push_back(first_header);
  f.header.push_back("# second header line");
  for (int k = 0; k < n; ++k) f.body.push_back("record " + std::to_string(k) + " # note");
  return f;
}

std::string text_of(const LineFile& f) {
  std::ostringstream s;
  write_line_file(s, f);
  return s.str();
}

// A cheap configuration for stage tests.
PipelineConfig tiny_config() {
  PipelineConfig cfg = parse_config(R"(
grid.vx_lo = 0.25
grid.vx_hi = 0.2578125
grid.vy_lo = 0.5
grid.vy_hi = 0.51171875
grid.step = 0.00390625
scan.T0 = 2
scan.digits = 16
scan.order = 20
)");
  validate_config(cfg);
  return cfg;
}

std::vector<double> numbers_in(const std::string& s) {
  std::vector<double> out;
  static const std::regex num(R"(-?[0-9]+\.[0-9]+)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), num); it != std::sregex_iterator(); ++it) {
    out.push_back(std::stod(it->str()));
  }
  return out;
}

std::string polyline(const std::string& svg, int body) {
  const std::string id = "id=\"body" + std::to_string(body) + "\"";
  const std::size_t at = svg.find(id);
  REQUIRE(at != std::string::npos);
  const std::size_t p = svg.find("points=\"", at) + 8;
  return svg.substr(p, svg.find('"', p) - p);
}

}  // namespace

// ---- configuration --------------------------------------------------------------

TEST_CASE("config dump and parse round trip") {
  const PipelineConfig defaults;
  const std::string dump = dump_config(defaults);
  CHECK(dump_config(parse_config(dump)) == dump);
  CHECK(dump.find("scan.digits = 134") != std::string::npos);
  CHECK(dump.find("scan.order = 154") != std::string::npos);
  CHECK(dump.find("refine.digits = 192") != std::string::npos);
  CHECK(dump.find("verify.order = 264") != std::string::npos);
  CHECK(dump.find("scan.T0 = 70") != std::string::npos);
  CHECK(dump.find("scan.threshold = 0.7") != std::string::npos);
  CHECK(dump.find("grid.step = 0.00048828125") != std::string::npos);
  CHECK(dump.find("correct.tau0 = 0.1") != std::string::npos);
  validate_config(defaults);

  const PipelineConfig desk = load_config(ORBITS_SOURCE_DIR "/configs/desk.conf");
  validate_config(desk);
  CHECK(desk.correct.decimal_digits == 32);
  CHECK(dump_config(parse_config(dump_config(desk))) == dump_config(desk));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("scan.bogus = 1"), ConfigError);
  CHECK_THROWS_AS(parse_config("scan.digits = twelve"), ConfigError);
  CHECK_THROWS_AS(parse_config("scan.digits = 12.5"), ConfigError);
  CHECK_THROWS_AS(parse_config("scan.digits"), ConfigError);
  CHECK_THROWS_AS(parse_config("classify.include_reversal = maybe"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/orbits.conf"), ConfigError);
  try {
    parse_config("# comment\n\nscan.T0 = 5\nnope = 1\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }

  auto rejects = [](const char* text) { CHECK_THROWS_AS(validate_config(parse_config(text)), ConfigError); };
  rejects("scan.digits = 8");
  rejects("run.workers = 0");
  rejects("scan.T0 = 1");
  rejects("grid.vx_hi = 1.5");
  rejects("correct.tau0 = 0");
  rejects("catalog.digits = 400");
  rejects("verify.min_digits = 500");
}

TEST_CASE("integrator keys apply to every stage") {
  const PipelineConfig cfg = parse_config("integrator.h_min = 1e-9\nintegrator.max_steps = 1234");
  for (const PrecisionConfig* p : {&cfg.scan, &cfg.correct, &cfg.refine, &cfg.verify, &cfg.classify}) {
    CHECK(p->h_min == 1e-9);
    CHECK(p->max_steps == 1234);
  }
}

// ---- line files, sharding, merging ------------------------------------------------

TEST_CASE("line files round trip and expose their header fields") {
  const LineFile f = numbered("# candidates T0=10 shard=2/5", 3);
  CHECK(f.kind() == "candidates");
  CHECK(f.shard_index() == 2);
  CHECK(f.shard_count() == 5);
  std::istringstream in(text_of(f));
  const LineFile g = read_line_file(in);
  CHECK(g.header == f.header);
  CHECK(g.body == f.body);

  LineFile h = numbered("# correct digits=20", 0);
  CHECK(h.shard_count() == 1);
  h.set_shard(1, 3);
  CHECK(h.header.front() == "# correct digits=20 shard=1/3");
}

TEST_CASE("round-robin shards of ten records have sizes 4, 3, 3") {
  const LineFile f = numbered("# candidates shard=0/1", 10);
  std::vector<std::size_t> sizes;
  for (int k = 0; k < 3; ++k) sizes.push_back(shard_file(f, 3, k).body.size());
  CHECK(sizes == std::vector<std::size_t>{4, 3, 3});
  const LineFile s1 = shard_file(f, 3, 1);
  CHECK(s1.body.front() == "record 1 # note");
  CHECK(s1.body.back() == "record 7 # note");
  CHECK(s1.header.front() == "# candidates shard=1/3");
  CHECK(shard_file(f, 1, 0).body == f.body);
}

TEST_CASE("merge inverts shard for any record count and shard count") {
  std::mt19937_64 rng(17);
  for (int n = 0; n <= 30; ++n) {
    for (int count = 1; count <= 7; ++count) {
      const LineFile f = numbered("# correct digits=20 shard=0/1", n);
      std::vector<LineFile> shards;
      for (int k = 0; k < count; ++k) shards.push_back(shard_file(f, count, k));
      std::shuffle(shards.begin(), shards.end(), rng);
      const LineFile m = merge_files(shards);
      CHECK(m.header == f.header);
      CHECK(m.body == f.body);
    }
  }
}

TEST_CASE("merge rejects inconsistent shard sets") {
  const LineFile f = numbered("# correct digits=20 shard=0/1", 9);
  std::vector<LineFile> shards;
  for (int k = 0; k < 3; ++k) shards.push_back(shard_file(f, 3, k));

  auto missing = shards;
  missing.erase(missing.begin() + 1);
  try {
    merge_files(missing);
    FAIL("expected an error");
  } catch (const JobError& e) {
    CHECK(std::string(e.what()).find("missing shard 1 of 3") != std::string::npos);
  }

  auto mismatch = shards;
  mismatch[2].header.front() = "# correct digits=24 shard=2/3";
  CHECK_THROWS_AS(merge_files(mismatch), JobError);

  auto extra_line = shards;
  extra_line[0].header[1] = "# something else";
  CHECK_THROWS_AS(merge_files(extra_line), JobError);

  auto twice = shards;
  twice[1] = twice[0];
  CHECK_THROWS_AS(merge_files(twice), JobError);

  auto mixed = shards;
  mixed.push_back(shard_file(f, 4, 3));
  CHECK_THROWS_AS(merge_files(mixed), JobError);

  auto short_shard = shards;
  short_shard[0].body.pop_back();
  CHECK_THROWS_AS(merge_files(short_shard), JobError);

  CHECK_THROWS_AS(merge_files({}), JobError);
  CHECK_THROWS_AS(shard_file(shards[0], 2, 0), JobError);
  CHECK_THROWS_AS(shard_file(f, 3, 3), JobError);
}

// ---- ordered worker pool ---------------------------------------------------------

TEST_CASE("ordered_map emits in index order for any worker count") {
  std::mt19937_64 rng(23);
  std::vector<int> delay(60);
  for (auto& d : delay) d = static_cast<int>(rng() % 3000);
  auto work = [&](std::size_t i) {
    std::this_thread::sleep_for(std::chrono::microseconds(delay[i]));
    return std::to_string(i * i);
  };
  std::vector<std::string> one, eight;
  ordered_map(delay.size(), 1, work, [&](std::string&& s) { one.push_back(s); });
  ordered_map(delay.size(), 8, work, [&](std::string&& s) { eight.push_back(s); });
  CHECK(one == eight);
  REQUIRE(one.size() == 60);
  CHECK(one[7] == "49");

  std::vector<std::string> none;
  ordered_map(0, 8, work, [&](std::string&& s) { none.push_back(s); });
  CHECK(none.empty());

  auto failing = [](std::size_t i) -> std::string {
    if (i == 13) throw JobError("record 14 failed");
    return "ok";
  };
  CHECK_THROWS_AS(ordered_map(40, 4, failing, [](std::string&&) {}), JobError);
  CHECK_THROWS_AS(ordered_map(40, 1, failing, [](std::string&&) {}), JobError);
}

// ---- stages ----------------------------------------------------------------------

TEST_CASE("sharded scans merge to the unsharded scan") {
  const PipelineConfig cfg = tiny_config();
  const LineFile whole = run_scan(cfg, {});
  REQUIRE(whole.body.size() == 3 * 4);
  for (int count : {2, 3, 7}) {
    std::vector<LineFile> parts;
    for (int k = 0; k < count; ++k) parts.push_back(run_scan(cfg, {k, count, 1}));
    const LineFile merged = merge_files(parts);
    CHECK(text_of(merged) == text_of(whole));
    // rows are the unit of a scan shard, so re-sharding the merged file gives back the parts
    for (int k = 0; k < count; ++k) CHECK(text_of(shard_file(merged, count, k)) == text_of(parts[static_cast<std::size_t>(k)]));
  }
  CHECK(text_of(run_scan(cfg, {0, 1, 4})) == text_of(whole));
  CHECK_THROWS_AS(run_scan(cfg, {3, 3, 1}), JobError);
  CHECK_NOTHROW(run_candidates(cfg, whole));
  CHECK_THROWS_AS(run_candidates(cfg, run_scan(cfg, {0, 2, 1})), JobError);
}

TEST_CASE("a colliding grid point becomes a failure line and the rest are processed") {
  PipelineConfig cfg = tiny_config();
  // with vx = 0 the bodies fall into a triple collision; the other two points move freely
  cfg.grid = GridSpec{"0", "0.5", "0.5", "0.5", "0.25"};
  cfg.T0 = "3";
  const LineFile scan = run_scan(cfg, {});
  REQUIRE(scan.body.size() == 3);
  // the step size collapses before the pair distance reaches the collision radius
  CHECK(scan.body[0].find(" step_underflow") != std::string::npos);
  CHECK(scan.body[0].find(" inf ") != std::string::npos);
  CHECK(scan.body[1].substr(scan.body[1].size() - 3) == " ok");
  CHECK(scan.body[2].substr(scan.body[2].size() - 3) == " ok");
}

TEST_CASE("failed candidates flow through every stage as failure records") {
  PipelineConfig cfg = tiny_config();
  cfg.correct = make_config(20, 24, "1e-12");
  cfg.refine = make_config(24, 28, "1e-16");
  cfg.verify = make_config(28, 32, "1e-20");
  cfg.classify = cfg.refine;
  cfg.verify_min_digits = 12;
  cfg.catalog_digits = 16;
  validate_config(cfg);

  LineFile cand;
  cand.header.push_back("# candidates T0=10 threshold=0.7 step=0.25 shard=0/1");
  cand.body.push_back("0 0 5 0.1 # cell=0,0");
  const LineFile corrected = run_correct(cfg, cand, {});
  REQUIRE(corrected.body.size() == 1);
  CHECK(corrected.body[0].rfind("step_underflow ", 0) == 0);
  CHECK(corrected.body[0].find("cell=0,0 correct=step_underflow:0") != std::string::npos);

  const LineFile refined = run_refine(cfg, corrected, {});
  CHECK(refined.body == corrected.body);
  const LineFile verified = run_verify(cfg, refined, {});
  CHECK(verified.body == corrected.body);
  const LineFile classified = run_classify(cfg, verified, {});
  CHECK(classified.kind() == "catalog");
  const Catalog cat = catalog_from(classified);
  CHECK(cat.records.empty());
  REQUIRE(cat.failures.size() == 1);
  CHECK(cat.failures[0].reason == "step_underflow");
  CHECK(cat.failures[0].provenance.find("cell=0,0") != std::string::npos);

  const DedupOutput d = run_dedup(cfg, {classified});
  CHECK(catalog_from(d.catalog).failures.empty());
  const LineFile report = run_report({d.catalog});
  CHECK(report.header.front().find("solutions=0 families=0 root_families=0") != std::string::npos);
  CHECK(report.body.empty());

  CHECK_THROWS_AS(run_refine(cfg, cand, {}), JobError);
  CHECK_THROWS_AS(run_correct(cfg, corrected, {}), JobError);
}

TEST_CASE("an empty shard produces a valid empty output") {
  const PipelineConfig cfg = tiny_config();
  LineFile cand;
  cand.header.push_back("# candidates T0=10 threshold=0.7 step=0.25 shard=0/1");
  cand.body.push_back("0 0 5 0.1 # cell=0,0");
  const LineFile out = run_correct(cfg, cand, {2, 3, 1});
  CHECK(out.body.empty());
  CHECK(out.kind() == "correct");
  CHECK(out.shard_index() == 2);
  CHECK(out.shard_count() == 3);
  std::istringstream in(text_of(out));
  CHECK(read_line_file(in).body.empty());
}

// ---- figures ---------------------------------------------------------------------

TEST_CASE("scatter places velocities by the grid window") {
  const ArithmeticContext ctx = make_context(40);
  const Triplet t{ctx.parse("0.4"), ctx.parse("0.4"), ctx.parse("10")};
  SolutionRecord r = make_record(t, ctx.parse("1e-30"), 30, make_signature(parse_word("1+2-3+")), 30);
  const GridSpec window;  // [0, 0.8]^2

  const std::string empty = render_scatter({}, window);
  CHECK(empty.find("<circle") == std::string::npos);
  CHECK(empty.find(">vx<") != std::string::npos);
  CHECK(empty.find(">vy<") != std::string::npos);

  const std::string one = render_scatter({r}, window);
  CHECK(one.find("<circle cx=\"320.00\" cy=\"320.00\" r=\"3\"/>") != std::string::npos);
  CHECK(one == render_scatter({r}, window));

  SolutionRecord ref = r;
  ref.vx = "0.2";
  ref.extra.push_back({"source", "\"reference\""});
  const std::string two = render_scatter({r, ref}, window);
  CHECK(two.find("class=\"src-reference\"") != std::string::npos);
  CHECK(two.find("class=\"src-new\"") != std::string::npos);

  SolutionRecord outside = r;
  outside.vx = "0.9";
  CHECK(render_scatter({outside}, window).find("r=\"3\"") == std::string::npos);
}

TEST_CASE("orbit figure closes on itself and mirrors with the initial velocity") {
  const PrecisionConfig cfg = make_config(32, 40, "1e-24");
  const ArithmeticContext ctx = cfg.context();
  const Triplet f8 = test::figure_eight(cfg, "1e-24");
  const SolutionRecord r = make_record(f8, ctx.parse("1e-24"), 24, make_signature(parse_word("1+2-3+1-2+3-")), 30);
  const OrbitSamples s = sample_orbit(r, cfg, 300);
  REQUIRE(s.xy.size() == 301);
  CHECK(s.t.front() == 0);
  CHECK(s.t.back() == doctest::Approx(6.32591398292621));
  for (int c = 0; c < 6; ++c) CHECK(std::abs(s.xy.front()[c] - s.xy.back()[c]) < 1e-12);
  // body 3 starts at the origin, the others at (-1, 0) and (1, 0)
  CHECK(s.xy.front()[0] == -1);
  CHECK(s.xy.front()[2] == 1);
  CHECK(s.xy.front()[4] == 0);

  SolutionRecord mirror = r;
  mirror.vy = "-" + r.vy;
  const OrbitSamples m = sample_orbit(mirror, cfg, 300);
  for (std::size_t k = 0; k < s.xy.size(); k += 10) {
    for (int b = 0; b < 3; ++b) {
      CHECK(m.xy[k][2 * b] == doctest::Approx(s.xy[k][2 * b]).epsilon(1e-14));
      CHECK(m.xy[k][2 * b + 1] == doctest::Approx(-s.xy[k][2 * b + 1]).epsilon(1e-14));
    }
  }

  const std::string svg = render_orbit(s), svg_m = render_orbit(m);
  CHECK(svg == render_orbit(sample_orbit(r, cfg, 300)));
  for (int b = 1; b <= 3; ++b) {
    const auto p = numbers_in(polyline(svg, b)), q = numbers_in(polyline(svg_m, b));
    REQUIRE(p.size() == q.size());
    REQUIRE(p.size() == 2 * 301);
    CHECK(p[0] == p[p.size() - 2]);
    CHECK(p[1] == p.back());
    for (std::size_t k = 0; k < p.size(); k += 2) {
      CHECK(std::abs(p[k] - q[k]) < 0.011);
      CHECK(std::abs(p[k + 1] + q[k + 1] - 640.0) < 0.011);
    }
  }
}

TEST_CASE("sample_orbit rejects impossible requests") {
  const PrecisionConfig cfg = make_config(24, 28, "1e-16");
  const ArithmeticContext ctx = cfg.context();
  SolutionRecord r = make_record({ctx.parse("0.3"), ctx.parse("0.5"), ctx.parse("2")}, ctx.parse("1"), 0,
                                 make_signature(parse_word("1+2-")), 20);
  CHECK_THROWS_AS(sample_orbit(r, cfg, 0), JobError);
  r.T = "-1";
  CHECK_THROWS_AS(sample_orbit(r, cfg, 10), JobError);
  r = make_record({ctx.parse("0"), ctx.parse("0"), ctx.parse("5")}, ctx.parse("1"), 0,
                  make_signature(parse_word("1+2-")), 20);
  CHECK_THROWS_AS(sample_orbit(r, cfg, 10), JobError);
}
