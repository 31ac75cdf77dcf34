// Command-line driver for the periodic-orbit search pipeline.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "orbits/pipeline.hpp"

using namespace orbits;

namespace {

constexpr int kExitJob = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  int shard_index = 0;
  int shard_count = 1;
  std::optional<int> workers;
  std::optional<int> digits;
  std::optional<int> order;
  std::vector<std::string> in;
  std::string out;
  int index = 0;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw JobError("cannot write '" + path + "'");
  f << text;
  if (!f) throw JobError("error writing '" + path + "'");
}

void write_file(const std::string& path, const LineFile& lf) {
  std::ostringstream s;
  write_line_file(s, lf);
  write_text(path, s.str());
}

LineFile read_input(const std::string& path) {
  if (path == "-") return read_line_file(std::cin);
  return read_line_file(path);
}

const std::string& single_input(const Common& c) {
  if (c.in.size() != 1) throw JobError("exactly one --in file is required");
  return c.in.front();
}

std::vector<LineFile> all_inputs(const Common& c) {
  if (c.in.empty()) throw JobError("at least one --in file is required");
  std::vector<LineFile> files;
  for (const auto& p : c.in) files.push_back(read_input(p));
  return files;
}

PrecisionConfig* stage_precision(PipelineConfig& cfg, const std::string& cmd) {
  if (cmd == "scan") return &cfg.scan;
  if (cmd == "correct") return &cfg.correct;
  if (cmd == "refine") return &cfg.refine;
  if (cmd == "verify") return &cfg.verify;
  if (cmd == "classify" || cmd == "render-orbit") return &cfg.classify;
  return nullptr;
}

PipelineConfig build_config(const Common& c, const std::string& cmd) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (c.workers) cfg.workers = *c.workers;
  if (c.digits || c.order) {
    PrecisionConfig* p = stage_precision(cfg, cmd);
    if (!p) throw ConfigError("--digits/--order do not apply to '" + cmd + "'");
    if (c.digits) p->decimal_digits = *c.digits;
    if (c.order) p->taylor_order = *c.order;
  }
  validate_config(cfg);
  return cfg;
}

int run(const std::string& cmd, const Common& c) {
  const PipelineConfig cfg = build_config(c, cmd);
  const StageOptions opts{c.shard_index, c.shard_count, cfg.workers};

  if (cmd == "config-dump") {
    write_text(c.out, dump_config(cfg));
  } else if (cmd == "scan") {
    write_file(c.out, run_scan(cfg, opts));
  } else if (cmd == "candidates") {
    write_file(c.out, run_candidates(cfg, read_input(single_input(c))));
  } else if (cmd == "correct") {
    write_file(c.out, run_correct(cfg, read_input(single_input(c)), opts));
  } else if (cmd == "refine") {
    write_file(c.out, run_refine(cfg, read_input(single_input(c)), opts));
  } else if (cmd == "verify") {
    write_file(c.out, run_verify(cfg, read_input(single_input(c)), opts));
  } else if (cmd == "classify") {
    write_file(c.out, run_classify(cfg, read_input(single_input(c)), opts));
  } else if (cmd == "dedup") {
    const DedupOutput d = run_dedup(cfg, all_inputs(c));
    for (const auto& conflict : d.result.conflicts) std::cerr << "conflict: " << conflict.message << "\n";
    write_file(c.out, d.catalog);
  } else if (cmd == "report") {
    write_file(c.out, run_report(all_inputs(c)));
  } else if (cmd == "render-scatter") {
    std::vector<SolutionRecord> records;
    for (const auto& f : all_inputs(c)) {
      Catalog cat = catalog_from(f);
      records.insert(records.end(), cat.records.begin(), cat.records.end());
    }
    write_text(c.out, render_scatter(records, cfg.grid));
  } else if (cmd == "render-orbit") {
    const Catalog cat = catalog_from(read_input(single_input(c)));
    if (c.index < 0 || static_cast<std::size_t>(c.index) >= cat.records.size()) {
      throw JobError("record index " + std::to_string(c.index) + " out of range (" +
                     std::to_string(cat.records.size()) + " records)");
    }
    write_text(c.out, render_orbit(sample_orbit(cat.records[static_cast<std::size_t>(c.index)], cfg.classify)));
  } else if (cmd == "shard") {
    write_file(c.out, shard_file(read_input(single_input(c)), c.shard_count, c.shard_index));
  } else if (cmd == "merge") {
    const auto files = all_inputs(c);
    if (c.shard_count != 1 && files.front().shard_count() != c.shard_count) {
      throw JobError("inputs are shards of " + std::to_string(files.front().shard_count()) + ", not " +
                     std::to_string(c.shard_count));
    }
    write_file(c.out, merge_files(files));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search, refine and classify periodic orbits of the equal-mass planar three-body problem"};
  app.require_subcommand(1);
  Common common;

  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"scan", "integrate every grid point and record the minimum return proximity"},
      {"candidates", "extract local proximity minima below the threshold from a merged scan"},
      {"correct", "damped Newton correction of candidate triplets"},
      {"refine", "classical Newton refinement of corrected triplets"},
      {"verify", "re-refine at higher precision and count agreeing digits"},
      {"classify", "syzygy signature of verified orbits, written as catalog records"},
      {"dedup", "group representations of the same solution"},
      {"report", "family table of a catalog"},
      {"render-scatter", "SVG scatter of initial velocities"},
      {"render-orbit", "SVG of one catalog orbit over a period"},
      {"shard", "round-robin shard of a data file"},
      {"merge", "interleave shard outputs back into input order"},
      {"config-dump", "print every configuration key with its value"},
  };
  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", common.config, "key=value configuration file");
    sub->add_option("--shard-index", common.shard_index, "shard processed by this job");
    sub->add_option("--shard-count", common.shard_count, "number of shards");
    sub->add_option("--workers", common.workers, "concurrent records");
    sub->add_option("--digits", common.digits, "decimal digits for this stage");
    sub->add_option("--order", common.order, "Taylor order for this stage");
    sub->add_option("--in", common.in, "input file ('-' for stdin); repeatable where several are accepted");
    sub->add_option("--out", common.out, "output file (default stdout)");
    if (std::string(s.name) == "render-orbit") sub->add_option("--index", common.index, "catalog record to draw");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitJob;
  }
}
