#pragma once

// Stage runners, sharding and rendering behind the command-line tool.
//
// Every data file is a block of '#' header lines followed by one record per
// line. The first header line names the file kind and carries a
// "shard=k/K" field. Sharding is round-robin over records (for scan files a
// record is a whole grid row), and merging interleaves the shards back into
// the original order.

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbits/catalog.hpp"
#include "orbits/correct.hpp"
#include "orbits/precision.hpp"
#include "orbits/scan.hpp"

namespace orbits {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JobError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  GridSpec grid;
  std::string T0 = "70";
  std::string threshold = "0.7";
  int scan_samples = 8;
  PrecisionConfig scan = presets::scan();

  PrecisionConfig correct = presets::scan();
  CanmOptions canm;

  PrecisionConfig refine = presets::refine();
  RefineOptions refine_opts;

  PrecisionConfig verify = presets::verify();
  int verify_min_digits = 150;

  PrecisionConfig classify = presets::refine();
  int syzygy_samples = 8;
  bool include_reversal = true;

  int catalog_digits = 150;
  std::string tol_tstar = "1e-40";

  int workers = 1;
};

/// Parses key=value lines on top of `base`; '#' starts a comment. Unknown
/// keys and malformed values throw ConfigError.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::string& path);
/// Every key with its current value, in a fixed order; parse_config of the
/// result reproduces the configuration.
std::string dump_config(const PipelineConfig& cfg);
/// Throws ConfigError on invalid values.
void validate_config(const PipelineConfig& cfg);

// ---- line files ---------------------------------------------------------------

struct LineFile {
  std::vector<std::string> header;  // first line: "# kind key=value ..."
  std::vector<std::string> body;

  std::string kind() const;
  int shard_index() const;
  int shard_count() const;
  void set_shard(int index, int count);
};

LineFile read_line_file(std::istream& in);
LineFile read_line_file(const std::string& path);
void write_line_file(std::ostream& out, const LineFile& f);
void write_line_file(const std::string& path, const LineFile& f);

/// Shard `index` of `count` of an unsharded file.
LineFile shard_file(const LineFile& f, int count, int index);
/// Inverse of shard_file. Throws JobError on a missing shard, mixed shard
/// counts, or headers that differ in anything but the shard field.
LineFile merge_files(const std::vector<LineFile>& shards);

// ---- stages -------------------------------------------------------------------

struct StageOptions {
  int shard_index = 0;
  int shard_count = 1;
  int workers = 1;
};

/// Maps `work` over [0, n) with at most `workers` concurrent calls and hands
/// the results to `emit` in index order.
void ordered_map(std::size_t n, int workers, const std::function<std::string(std::size_t)>& work,
                 const std::function<void(std::string&&)>& emit);

LineFile run_scan(const PipelineConfig& cfg, const StageOptions& opts);
LineFile run_candidates(const PipelineConfig& cfg, const LineFile& scan);
LineFile run_correct(const PipelineConfig& cfg, const LineFile& candidates, const StageOptions& opts);
LineFile run_refine(const PipelineConfig& cfg, const LineFile& corrected, const StageOptions& opts);
LineFile run_verify(const PipelineConfig& cfg, const LineFile& refined, const StageOptions& opts);
LineFile run_classify(const PipelineConfig& cfg, const LineFile& verified, const StageOptions& opts);

struct DedupOutput {
  LineFile catalog;
  DedupResult result;
};
DedupOutput run_dedup(const PipelineConfig& cfg, const std::vector<LineFile>& catalogs);
LineFile run_report(const std::vector<LineFile>& catalogs);

Catalog catalog_from(const LineFile& f, bool validate = true);
LineFile catalog_file(const Catalog& c);

// ---- figures ------------------------------------------------------------------

/// (vx, vy) scatter over the grid window; records are grouped into marker
/// classes by their "source" field (default "new").
std::string render_scatter(const std::vector<SolutionRecord>& records, const GridSpec& window);

/// Positions of the three bodies along one period, sampled at `samples` + 1
/// equally spaced times including both ends.
struct OrbitSamples {
  std::vector<double> t;
  std::vector<std::array<double, 6>> xy;  // x1 y1 x2 y2 x3 y3
};
OrbitSamples sample_orbit(const SolutionRecord& r, const PrecisionConfig& cfg, int samples = 1200);
std::string render_orbit(const OrbitSamples& s);

}  // namespace orbits
