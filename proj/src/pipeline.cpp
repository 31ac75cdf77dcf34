#include "orbits/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "text_util.hpp"

namespace orbits {

namespace {

std::vector<std::string> header_tokens(const LineFile& f) {
  if (f.header.empty()) return {};
  return text::tokens(f.header.front().substr(1));
}

std::string join(const std::vector<std::string>& toks) {
  std::string out = "#";
  for (const auto& t : toks) out += " " + t;
  return out;
}

// Header block with the shard field removed, for comparing shards.
std::vector<std::string> header_without_shard(const LineFile& f) {
  std::vector<std::string> h = f.header;
  if (h.empty()) return h;
  auto toks = header_tokens(f);
  toks.erase(std::remove_if(toks.begin(), toks.end(), [](const std::string& t) { return t.rfind("shard=", 0) == 0; }),
             toks.end());
  h.front() = join(toks);
  return h;
}

// Lines per shardable record: a whole grid row for scan files.
std::size_t record_width(const LineFile& f) {
  if (f.kind() != "scan") return 1;
  const ScanFileHeader h = parse_scan_header(f.header.front());
  return static_cast<std::size_t>(h.grid.nx(make_context(32)));
}

LineFile select_shard(const LineFile& in, const StageOptions& opts) {
  if (opts.shard_count < 1 || opts.shard_index < 0 || opts.shard_index >= opts.shard_count) {
    throw JobError("shard index " + std::to_string(opts.shard_index) + " out of range for " +
                   std::to_string(opts.shard_count) + " shards");
  }
  if (opts.shard_count == 1) return in;
  return shard_file(in, opts.shard_count, opts.shard_index);
}

LineFile with_header(std::string first, const LineFile& from) {
  LineFile out;
  out.header.push_back(std::move(first));
  out.set_shard(from.shard_index(), from.shard_count());
  return out;
}

void require_kind(const LineFile& f, const char* kind, const char* stage) {
  if (f.kind() != kind) {
    throw JobError(std::string(stage) + " expects a '" + kind + "' file, got '" + f.kind() + "'");
  }
}

std::string append(const std::string& comment, const std::string& note) {
  return comment.empty() ? note : comment + " " + note;
}

// Parses a result line, turning format problems into job errors with context.
ResultLine parse_result(const std::string& line, const ArithmeticContext& ctx, std::size_t index) {
  try {
    return parse_result_line(line, ctx);
  } catch (const std::exception& e) {
    throw JobError("record " + std::to_string(index + 1) + ": " + e.what());
  }
}

std::string precision_fields(const PrecisionConfig& p) {
  return "digits=" + std::to_string(p.decimal_digits) + " order=" + std::to_string(p.taylor_order) +
         " tol=" + p.convergence_tol;
}

}  // namespace

// ---- line files -----------------------------------------------------------------

std::string LineFile::kind() const {
  const auto toks = header_tokens(*this);
  if (toks.empty() || toks.front().find('=') != std::string::npos) return {};
  return toks.front();
}

int LineFile::shard_index() const {
  for (const auto& t : header_tokens(*this)) {
    if (t.rfind("shard=", 0) == 0) return text::parse_shard(t.substr(6)).first;
  }
  return 0;
}

int LineFile::shard_count() const {
  for (const auto& t : header_tokens(*this)) {
    if (t.rfind("shard=", 0) == 0) return text::parse_shard(t.substr(6)).second;
  }
  return 1;
}

void LineFile::set_shard(int index, int count) {
  const std::string field = "shard=" + std::to_string(index) + "/" + std::to_string(count);
  if (header.empty()) {
    header.push_back("# data " + field);
    return;
  }
  auto toks = header_tokens(*this);
  bool found = false;
  for (auto& t : toks) {
    if (t.rfind("shard=", 0) == 0) {
      t = field;
      found = true;
    }
  }
  if (!found) toks.push_back(field);
  header.front() = join(toks);
}

LineFile read_line_file(std::istream& in) {
  LineFile f;
  std::string line;
  bool in_header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (in_header && !line.empty() && line[0] == '#') {
      f.header.push_back(line);
      continue;
    }
    in_header = false;
    if (!line.empty()) f.body.push_back(line);
  }
  return f;
}

LineFile read_line_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw JobError("cannot read '" + path + "'");
  return read_line_file(in);
}

void write_line_file(std::ostream& out, const LineFile& f) {
  for (const auto& h : f.header) out << h << '\n';
  for (const auto& b : f.body) out << b << '\n';
}

void write_line_file(const std::string& path, const LineFile& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw JobError("cannot write '" + path + "'");
  write_line_file(out, f);
  if (!out) throw JobError("error writing '" + path + "'");
}

LineFile shard_file(const LineFile& f, int count, int index) {
  if (count < 1 || index < 0 || index >= count) {
    throw JobError("shard index " + std::to_string(index) + " out of range for " + std::to_string(count) +
                   " shards");
  }
  if (f.shard_count() != 1) throw JobError("input is already a shard; merge it before re-sharding");
  const std::size_t width = record_width(f);
  if (f.body.size() % width != 0) throw JobError("record count is not a whole number of grid rows");
  LineFile out;
  out.header = f.header;
  out.set_shard(index, count);
  const std::size_t records = f.body.size() / width;
  for (std::size_t r = static_cast<std::size_t>(index); r < records; r += static_cast<std::size_t>(count)) {
    out.body.insert(out.body.end(), f.body.begin() + static_cast<std::ptrdiff_t>(r * width),
                    f.body.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
  }
  return out;
}

LineFile merge_files(const std::vector<LineFile>& shards) {
  if (shards.empty()) throw JobError("nothing to merge");
  const int count = shards.front().shard_count();
  std::vector<const LineFile*> by_index(static_cast<std::size_t>(count), nullptr);
  const auto reference = header_without_shard(shards.front());
  for (const auto& s : shards) {
    if (s.shard_count() != count) {
      throw JobError("shards disagree on the shard count (" + std::to_string(count) + " vs " +
                     std::to_string(s.shard_count()) + ")");
    }
    if (header_without_shard(s) != reference) {
      throw JobError("shard " + std::to_string(s.shard_index()) + " has a different header: " +
                     (s.header.empty() ? std::string("(none)") : s.header.front()));
    }
    auto& slot = by_index[static_cast<std::size_t>(s.shard_index())];
    if (slot) throw JobError("shard " + std::to_string(s.shard_index()) + " given twice");
    slot = &s;
  }
  for (int k = 0; k < count; ++k) {
    if (!by_index[static_cast<std::size_t>(k)]) {
      throw JobError("missing shard " + std::to_string(k) + " of " + std::to_string(count));
    }
  }

  const std::size_t width = record_width(shards.front());
  std::size_t total = 0;
  for (const auto* s : by_index) {
    if (s->body.size() % width != 0) throw JobError("shard " + std::to_string(s->shard_index()) + " is truncated");
    total += s->body.size() / width;
  }
  LineFile out;
  out.header = shards.front().header;
  out.set_shard(0, 1);
  for (std::size_t r = 0; r < total; ++r) {
    const LineFile& s = *by_index[r % static_cast<std::size_t>(count)];
    const std::size_t pos = r / static_cast<std::size_t>(count);
    if ((pos + 1) * width > s.body.size()) {
      throw JobError("shard " + std::to_string(s.shard_index()) + " has too few records for round-robin order");
    }
    out.body.insert(out.body.end(), s.body.begin() + static_cast<std::ptrdiff_t>(pos * width),
                    s.body.begin() + static_cast<std::ptrdiff_t>((pos + 1) * width));
  }
  return out;
}

// ---- worker pool ----------------------------------------------------------------

void ordered_map(std::size_t n, int workers, const std::function<std::string(std::size_t)>& work,
                 const std::function<void(std::string&&)>& emit) {
  const std::size_t w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) emit(work(i));
    return;
  }
  // results wait in a window of 4 w slots until every earlier index is done
  const std::size_t window = 4 * w;
  for (std::size_t begin = 0; begin < n; begin += window) {
    const std::size_t end = std::min(n, begin + window);
    std::vector<std::string> slots(end - begin);
    std::atomic<std::size_t> next{begin};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
      for (std::size_t i = next++; i < end; i = next++) {
        try {
          slots[i - begin] = work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(w, end - begin); ++t) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    for (auto& s : slots) emit(std::move(s));
  }
}

// ---- stages ---------------------------------------------------------------------

LineFile run_scan(const PipelineConfig& cfg, const StageOptions& opts) {
  if (opts.shard_count < 1 || opts.shard_index < 0 || opts.shard_index >= opts.shard_count) {
    throw JobError("shard index " + std::to_string(opts.shard_index) + " out of range for " +
                   std::to_string(opts.shard_count) + " shards");
  }
  const ArithmeticContext ctx = cfg.scan.context();
  const int nx = cfg.grid.nx(ctx), ny = cfg.grid.ny(ctx);
  const Real T0 = ctx.parse(cfg.T0);

  std::vector<std::pair<int, int>> cells;
  for (int j = opts.shard_index; j < ny; j += opts.shard_count) {
    for (int i = 0; i < nx; ++i) cells.emplace_back(i, j);
  }
  LineFile out;
  out.header.push_back(format_scan_header({cfg.grid, opts.shard_index, opts.shard_count}));
  ordered_map(
      cells.size(), opts.workers,
      [&](std::size_t k) {
        const auto [i, j] = cells[k];
        const ScanCell c = scan_point({cfg.grid.vx_at(i, ctx), cfg.grid.vy_at(j, ctx)}, T0, cfg.scan, cfg.scan_samples);
        return format_scan_cell(c, cfg.scan.decimal_digits);
      },
      [&](std::string&& line) { out.body.push_back(std::move(line)); });
  return out;
}

LineFile run_candidates(const PipelineConfig& cfg, const LineFile& scan) {
  require_kind(scan, "scan", "candidates");
  const ArithmeticContext ctx = cfg.scan.context();
  std::stringstream buf;
  write_line_file(buf, scan);
  GridSpec spec;
  ScanGrid grid;
  try {
    grid = read_scan_grid(buf, ctx, &spec);
  } catch (const std::exception& e) {
    throw JobError(e.what());
  }
  const Real lo_x = ctx.parse(spec.vx_lo), lo_y = ctx.parse(spec.vy_lo), step = ctx.parse(spec.step);

  LineFile out;
  out.header.push_back("# candidates T0=" + cfg.T0 + " threshold=" + cfg.threshold + " step=" + spec.step);
  out.set_shard(0, 1);
  for (const auto& c : find_candidates(grid, ctx.parse(cfg.threshold))) {
    const long i = ((c.vx - lo_x) / step + Real(0.5)).to_long_floor();
    const long j = ((c.vy - lo_y) / step + Real(0.5)).to_long_floor();
    out.body.push_back(format_candidate(c, cfg.scan.decimal_digits) + " # cell=" + std::to_string(i) + "," +
                       std::to_string(j));
  }
  return out;
}

LineFile run_correct(const PipelineConfig& cfg, const LineFile& candidates, const StageOptions& opts) {
  require_kind(candidates, "candidates", "correct");
  const LineFile in = select_shard(candidates, opts);
  const ArithmeticContext ctx = cfg.correct.context();
  LineFile out = with_header("# correct " + precision_fields(cfg.correct), in);
  ordered_map(
      in.body.size(), opts.workers,
      [&](std::size_t k) {
        std::string comment;
        text::tokens(in.body[k], &comment);
        CandidateTriplet c;
        try {
          c = parse_candidate(in.body[k], ctx);
        } catch (const std::exception& e) {
          throw JobError("record " + std::to_string(k + 1) + ": " + e.what());
        }
        ResultLine r;
        r.triplet = {c.vx, c.vy, c.T};
        r.norm = ctx.zero();
        try {
          const CorrectionResult res = canm_correct(r.triplet, cfg.correct, cfg.canm);
          r.status = to_string(res.status);
          r.triplet = res.triplet;
          r.norm = res.final_norm;
          r.count = res.iterations;
        } catch (const std::exception&) {
          r.status = "diverged";
        }
        r.comment = append(comment, "correct=" + r.status + ":" + std::to_string(r.count));
        return format_result_line(r, cfg.correct.decimal_digits);
      },
      [&](std::string&& line) { out.body.push_back(std::move(line)); });
  return out;
}

LineFile run_refine(const PipelineConfig& cfg, const LineFile& corrected, const StageOptions& opts) {
  require_kind(corrected, "correct", "refine");
  const LineFile in = select_shard(corrected, opts);
  const ArithmeticContext ctx = cfg.refine.context();
  const Real target = cfg.refine.tolerance(ctx);
  LineFile out = with_header("# refine " + precision_fields(cfg.refine), in);
  ordered_map(
      in.body.size(), opts.workers,
      [&](std::size_t k) {
        ResultLine r = parse_result(in.body[k], ctx, k);
        if (r.status != "converged") return in.body[k];
        try {
          const CorrectionResult res = newton_refine(r.triplet, cfg.refine, target, cfg.refine_opts);
          r.status = to_string(res.status);
          r.triplet = res.triplet;
          r.norm = res.final_norm;
          r.count = res.iterations;
        } catch (const std::exception&) {
          r.status = "diverged";
          r.count = 0;
        }
        r.comment = append(r.comment, "refine=" + r.status + ":" + std::to_string(r.count));
        return format_result_line(r, cfg.refine.decimal_digits);
      },
      [&](std::string&& line) { out.body.push_back(std::move(line)); });
  return out;
}

LineFile run_verify(const PipelineConfig& cfg, const LineFile& refined, const StageOptions& opts) {
  require_kind(refined, "refine", "verify");
  const LineFile in = select_shard(refined, opts);
  const ArithmeticContext ctx = cfg.verify.context();
  LineFile out = with_header(
      "# verify " + precision_fields(cfg.verify) + " min_digits=" + std::to_string(cfg.verify_min_digits), in);
  ordered_map(
      in.body.size(), opts.workers,
      [&](std::size_t k) {
        ResultLine r = parse_result(in.body[k], ctx, k);
        if (r.status != "converged") return in.body[k];
        try {
          const Verification v = verify(r.triplet, cfg.refine, cfg.verify, cfg.refine_opts);
          r.status = v.refined && v.agreed_digits >= cfg.verify_min_digits ? "verified" : "unverified";
          if (v.refined) r.triplet = v.second.triplet;
          r.norm = v.second.final_norm;
          r.count = v.agreed_digits;
        } catch (const std::exception&) {
          r.status = "unverified";
          r.count = 0;
        }
        r.comment = append(r.comment, "verify=" + r.status + ":" + std::to_string(r.count));
        return format_result_line(r, cfg.verify.decimal_digits);
      },
      [&](std::string&& line) { out.body.push_back(std::move(line)); });
  return out;
}

LineFile run_classify(const PipelineConfig& cfg, const LineFile& verified, const StageOptions& opts) {
  require_kind(verified, "verify", "classify");
  const LineFile in = select_shard(verified, opts);
  const ArithmeticContext ctx = cfg.classify.context();
  LineFile out = with_header("# catalog version=" + std::to_string(kCatalogVersion), in);
  SyzygyOptions syz;
  syz.samples_per_step = cfg.syzygy_samples;
  ordered_map(
      in.body.size(), opts.workers,
      [&](std::size_t k) {
        const ResultLine r = parse_result(in.body[k], ctx, k);
        const auto toks = text::tokens(in.body[k]);
        FailureRecord f{r.status, toks[1], toks[2], toks[3], "", r.comment};
        if (r.status != "verified") return format_failure(f);
        try {
          const auto events = detect_syzygies(r.triplet.velocity(), r.triplet.T, cfg.classify, syz);
          const Signature sig = make_signature(to_word(events), cfg.include_reversal);
          return format_record(make_record(r.triplet, r.norm, r.count, sig, cfg.catalog_digits,
                                           append(r.comment, "classify=ok")));
        } catch (const std::exception& e) {
          f.reason = "ambiguous_topology";
          f.detail = e.what();
          f.provenance = append(r.comment, "classify=ambiguous_topology");
          return format_failure(f);
        }
      },
      [&](std::string&& line) { out.body.push_back(std::move(line)); });
  return out;
}

Catalog catalog_from(const LineFile& f, bool validate) {
  if (!f.kind().empty() && f.kind() != "catalog") throw JobError("expected a catalog file, got '" + f.kind() + "'");
  std::stringstream buf;
  write_line_file(buf, f);
  try {
    return read_catalog(buf, validate);
  } catch (const CatalogError& e) {
    throw JobError(e.what());
  }
}

LineFile catalog_file(const Catalog& c) {
  LineFile out;
  out.header.push_back("# catalog version=" + std::to_string(kCatalogVersion));
  out.set_shard(0, 1);
  for (const auto& r : c.records) out.body.push_back(format_record(r));
  for (const auto& f : c.failures) out.body.push_back(format_failure(f));
  return out;
}

DedupOutput run_dedup(const PipelineConfig& cfg, const std::vector<LineFile>& catalogs) {
  std::vector<SolutionRecord> all;
  for (const auto& f : catalogs) {
    Catalog c = catalog_from(f);
    all.insert(all.end(), c.records.begin(), c.records.end());
  }
  DedupOutput out;
  out.result = dedup_solutions(all, cfg.tol_tstar);
  out.catalog = catalog_file(Catalog{out.result.solutions, {}});
  return out;
}

LineFile run_report(const std::vector<LineFile>& catalogs) {
  std::vector<SolutionRecord> all;
  for (const auto& f : catalogs) {
    Catalog c = catalog_from(f);
    all.insert(all.end(), c.records.begin(), c.records.end());
  }
  const FamilyTable table = group_families(all);
  LineFile out;
  out.header.push_back("# report solutions=" + std::to_string(all.size()) +
                       " families=" + std::to_string(table.families.size()) +
                       " root_families=" + std::to_string(table.root_families));
  out.header.push_back("# signature members satellite_of f2_word word_length T_star vx vy");
  for (const auto& f : table.families) {
    const SolutionRecord& r = f.representative;
    out.body.push_back(f.signature + " " + std::to_string(f.members) + " " + f.satellite_of.value_or("-") + " " +
                       (r.f2_word.empty() ? "-" : r.f2_word) + " " + std::to_string(r.word_length) + " " +
                       r.T_star + " " + r.vx + " " + r.vy);
  }
  return out;
}

}  // namespace orbits
