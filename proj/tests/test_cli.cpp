#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "orbits/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("orbits_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Cleanup {
  ~Cleanup() {
    std::error_code ec;
    fs::remove_all(workdir(), ec);
  }
} cleanup;

std::string path(const std::string& name) { return (workdir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(ORBITS_CLI) + " " + args + " 2>>" + path("stderr.txt");
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kTinyConfig = R"(grid.vx_lo = 0.25
grid.vx_hi = 0.2578125
grid.vy_lo = 0.5
grid.vy_hi = 0.51171875
grid.step = 0.00390625
scan.T0 = 2
scan.digits = 16
scan.order = 20
)";

}  // namespace

TEST_CASE("config-dump prints a configuration that parses back") {
  REQUIRE(run("config-dump --out " + path("dump.conf")) == 0);
  const std::string dump = slurp(path("dump.conf"));
  CHECK(orbits::dump_config(orbits::parse_config(dump)) == dump);

  REQUIRE(run("config-dump --config " ORBITS_SOURCE_DIR "/configs/desk.conf --workers 3 --out " + path("d2.conf")) == 0);
  const orbits::PipelineConfig cfg = orbits::load_config(path("d2.conf"));
  CHECK(cfg.workers == 3);
  CHECK(cfg.correct.decimal_digits == 32);
}

TEST_CASE("configuration problems exit with status 2") {
  CHECK(run("scan --config /nonexistent/orbits.conf") == 2);
  write(path("bad.conf"), "scan.unknown = 1\n");
  CHECK(run("scan --config " + path("bad.conf")) == 2);
  CHECK(run("scan --digits 8") == 2);
  CHECK(run("dedup --digits 40 --in x") == 2);
  CHECK(run("scan --no-such-flag") == 2);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("job problems exit with status 1") {
  CHECK(run("correct --in /nonexistent/candidates.txt") == 1);
  write(path("not_candidates.txt"), "# correct digits=20 shard=0/1\n");
  CHECK(run("correct --in " + path("not_candidates.txt")) == 1);
  CHECK(run("scan --shard-index 3 --shard-count 3") == 1);
  CHECK(run("merge --in " + path("not_candidates.txt") + " --shard-count 4") == 1);
  write(path("empty_catalog.txt"), "# catalog version=1 shard=0/1\n");
  CHECK(run("render-orbit --index 0 --in " + path("empty_catalog.txt")) == 1);
}

TEST_CASE("sharded scan jobs merge into the single-job output") {
  write(path("tiny.conf"), kTinyConfig);
  const std::string cfg = " --config " + path("tiny.conf");
  REQUIRE(run("scan" + cfg + " --out " + path("scan.txt")) == 0);
  std::string merge_args;
  for (int k = 0; k < 3; ++k) {
    const std::string out = path("scan." + std::to_string(k) + ".txt");
    REQUIRE(run("scan" + cfg + " --shard-index " + std::to_string(k) + " --shard-count 3 --out " + out) == 0);
    merge_args += " --in " + out;
  }
  REQUIRE(run("merge --shard-count 3" + merge_args + " --out " + path("merged.txt")) == 0);
  CHECK(slurp(path("merged.txt")) == slurp(path("scan.txt")));

  // shard then merge through the tool as well
  std::string pieces;
  for (int k = 0; k < 2; ++k) {
    const std::string out = path("piece." + std::to_string(k) + ".txt");
    REQUIRE(run("shard --in " + path("scan.txt") + " --shard-count 2 --shard-index " + std::to_string(k) +
                " --out " + out) == 0);
    pieces += " --in " + out;
  }
  REQUIRE(run("merge" + pieces + " --out " + path("merged2.txt")) == 0);
  CHECK(slurp(path("merged2.txt")) == slurp(path("scan.txt")));

  REQUIRE(run("candidates" + cfg + " --in " + path("scan.txt") + " --out " + path("cand.txt")) == 0);
  CHECK(slurp(path("cand.txt")).rfind("# candidates ", 0) == 0);
  // a missing shard is a job error
  CHECK(run("merge --in " + path("piece.0.txt") + " --out " + path("nope.txt")) == 1);
}

TEST_CASE("figures render from an empty catalog") {
  write(path("empty_catalog.txt"), "# catalog version=1 shard=0/1\n");
  REQUIRE(run("render-scatter --in " + path("empty_catalog.txt") + " --out " + path("scatter.svg")) == 0);
  CHECK(slurp(path("scatter.svg")).rfind("<svg ", 0) == 0);
  REQUIRE(run("report --in " + path("empty_catalog.txt") + " --out " + path("report.txt")) == 0);
  CHECK(slurp(path("report.txt")).find("solutions=0") != std::string::npos);
}
