#include <algorithm>
#include <fstream>
#include <type_traits>
#include <sstream>

#include "orbits/pipeline.hpp"

namespace orbits {

namespace {

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long r = 0;
  try {
    r = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return static_cast<int>(r);
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long r = 0;
  try {
    r = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return r;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double r = 0;
  try {
    r = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return r;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string decimal(const std::string& key, const std::string& v) {
  try {
    parse_decimal(v, make_context(32));
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
  return v;
}

// shortest text that reads back to the same double
std::string fmt(double v) {
  for (int p = 1; p <= 17; ++p) {
    std::ostringstream s;
    s.precision(p);
    s << v;
    if (std::stod(s.str()) == v) return s.str();
  }
  return std::to_string(v);
}

struct Entry {
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

void add_precision(std::vector<Entry>& e, const std::string& stage, PrecisionConfig PipelineConfig::*member,
                   bool with_tol) {
  const std::string digits = stage + ".digits", order = stage + ".order", tol = stage + ".tol";
  e.push_back({digits, [member](const PipelineConfig& c) { return std::to_string((c.*member).decimal_digits); },
               [member, digits](PipelineConfig& c, const std::string& v) {
                 (c.*member).decimal_digits = to_int(digits, v);
               }});
  e.push_back({order, [member](const PipelineConfig& c) { return std::to_string((c.*member).taylor_order); },
               [member, order](PipelineConfig& c, const std::string& v) {
                 (c.*member).taylor_order = to_int(order, v);
               }});
  if (with_tol) {
    e.push_back({tol, [member](const PipelineConfig& c) { return (c.*member).convergence_tol; },
                 [member, tol](PipelineConfig& c, const std::string& v) { (c.*member).convergence_tol = decimal(tol, v); }});
  }
}

PrecisionConfig PipelineConfig::*const kStages[] = {&PipelineConfig::scan, &PipelineConfig::correct,
                                                    &PipelineConfig::refine, &PipelineConfig::verify,
                                                    &PipelineConfig::classify};

template <typename T>
void add_integrator(std::vector<Entry>& e, const char* key, T PrecisionConfig::*field) {
  e.push_back({key, [field](const PipelineConfig& c) {
                 if constexpr (std::is_same_v<T, long>) {
                   return std::to_string(c.scan.*field);
                 } else {
                   return fmt(c.scan.*field);
                 }
               },
               [field, key](PipelineConfig& c, const std::string& v) {
                 T value;
                 if constexpr (std::is_same_v<T, long>) {
                   value = to_long(key, v);
                 } else {
                   value = to_double(key, v);
                 }
                 for (auto stage : kStages) (c.*stage).*field = value;
               }});
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> e;
    e.push_back({"grid.vx_lo", [](const PipelineConfig& c) { return c.grid.vx_lo; },
                 [](PipelineConfig& c, const std::string& v) { c.grid.vx_lo = decimal("grid.vx_lo", v); }});
    e.push_back({"grid.vx_hi", [](const PipelineConfig& c) { return c.grid.vx_hi; },
                 [](PipelineConfig& c, const std::string& v) { c.grid.vx_hi = decimal("grid.vx_hi", v); }});
    e.push_back({"grid.vy_lo", [](const PipelineConfig& c) { return c.grid.vy_lo; },
                 [](PipelineConfig& c, const std::string& v) { c.grid.vy_lo = decimal("grid.vy_lo", v); }});
    e.push_back({"grid.vy_hi", [](const PipelineConfig& c) { return c.grid.vy_hi; },
                 [](PipelineConfig& c, const std::string& v) { c.grid.vy_hi = decimal("grid.vy_hi", v); }});
    e.push_back({"grid.step", [](const PipelineConfig& c) { return c.grid.step; },
                 [](PipelineConfig& c, const std::string& v) { c.grid.step = decimal("grid.step", v); }});

    e.push_back({"scan.T0", [](const PipelineConfig& c) { return c.T0; },
                 [](PipelineConfig& c, const std::string& v) { c.T0 = decimal("scan.T0", v); }});
    e.push_back({"scan.threshold", [](const PipelineConfig& c) { return c.threshold; },
                 [](PipelineConfig& c, const std::string& v) { c.threshold = decimal("scan.threshold", v); }});
    e.push_back({"scan.samples_per_step", [](const PipelineConfig& c) { return std::to_string(c.scan_samples); },
                 [](PipelineConfig& c, const std::string& v) { c.scan_samples = to_int("scan.samples_per_step", v); }});
    add_precision(e, "scan", &PipelineConfig::scan, false);

    add_precision(e, "correct", &PipelineConfig::correct, true);
    e.push_back({"correct.tau0", [](const PipelineConfig& c) { return fmt(c.canm.tau0); },
                 [](PipelineConfig& c, const std::string& v) { c.canm.tau0 = to_double("correct.tau0", v); }});
    e.push_back({"correct.tau_min", [](const PipelineConfig& c) { return fmt(c.canm.tau_min); },
                 [](PipelineConfig& c, const std::string& v) { c.canm.tau_min = to_double("correct.tau_min", v); }});
    e.push_back({"correct.max_iter", [](const PipelineConfig& c) { return std::to_string(c.canm.max_iter); },
                 [](PipelineConfig& c, const std::string& v) { c.canm.max_iter = to_int("correct.max_iter", v); }});
    e.push_back({"correct.growth_limit", [](const PipelineConfig& c) { return std::to_string(c.canm.growth_limit); },
                 [](PipelineConfig& c, const std::string& v) {
                   c.canm.growth_limit = to_int("correct.growth_limit", v);
                 }});

    add_precision(e, "refine", &PipelineConfig::refine, true);
    e.push_back({"refine.max_iter", [](const PipelineConfig& c) { return std::to_string(c.refine_opts.max_iter); },
                 [](PipelineConfig& c, const std::string& v) { c.refine_opts.max_iter = to_int("refine.max_iter", v); }});
    e.push_back({"refine.growth_limit",
                 [](const PipelineConfig& c) { return std::to_string(c.refine_opts.growth_limit); },
                 [](PipelineConfig& c, const std::string& v) {
                   c.refine_opts.growth_limit = to_int("refine.growth_limit", v);
                 }});

    add_precision(e, "verify", &PipelineConfig::verify, true);
    e.push_back({"verify.min_digits", [](const PipelineConfig& c) { return std::to_string(c.verify_min_digits); },
                 [](PipelineConfig& c, const std::string& v) { c.verify_min_digits = to_int("verify.min_digits", v); }});

    add_precision(e, "classify", &PipelineConfig::classify, false);
    e.push_back({"classify.samples_per_step", [](const PipelineConfig& c) { return std::to_string(c.syzygy_samples); },
                 [](PipelineConfig& c, const std::string& v) {
                   c.syzygy_samples = to_int("classify.samples_per_step", v);
                 }});
    e.push_back({"classify.include_reversal",
                 [](const PipelineConfig& c) { return std::string(c.include_reversal ? "true" : "false"); },
                 [](PipelineConfig& c, const std::string& v) {
                   c.include_reversal = to_bool("classify.include_reversal", v);
                 }});

    e.push_back({"catalog.digits", [](const PipelineConfig& c) { return std::to_string(c.catalog_digits); },
                 [](PipelineConfig& c, const std::string& v) { c.catalog_digits = to_int("catalog.digits", v); }});
    e.push_back({"catalog.tol_tstar", [](const PipelineConfig& c) { return c.tol_tstar; },
                 [](PipelineConfig& c, const std::string& v) { c.tol_tstar = decimal("catalog.tol_tstar", v); }});

    add_integrator(e, "integrator.step_safety", &PrecisionConfig::step_safety);
    add_integrator(e, "integrator.h_min", &PrecisionConfig::h_min);
    add_integrator(e, "integrator.h_max", &PrecisionConfig::h_max);
    add_integrator(e, "integrator.collision_distance", &PrecisionConfig::collision_distance);
    add_integrator(e, "integrator.max_steps", &PrecisionConfig::max_steps);

    e.push_back({"run.workers", [](const PipelineConfig& c) { return std::to_string(c.workers); },
                 [](PipelineConfig& c, const std::string& v) { c.workers = to_int("run.workers", v); }});
    return e;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = entries();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return key == e.key; });
    if (it == table.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->set(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

void validate_config(const PipelineConfig& cfg) {
  try {
    for (auto stage : kStages) (cfg.*stage).validate();
    const ArithmeticContext ctx = cfg.scan.context();
    cfg.grid.validate(ctx);
    if (!(ctx.parse(cfg.T0) > 1)) throw ConfigError("scan.T0 must exceed 1");
    if (!(ctx.parse(cfg.threshold) > 0)) throw ConfigError("scan.threshold must be positive");
    if (!(ctx.parse(cfg.tol_tstar) > 0)) throw ConfigError("catalog.tol_tstar must be positive");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (cfg.scan_samples < 1 || cfg.syzygy_samples < 1) throw ConfigError("samples_per_step must be at least 1");
  if (cfg.workers < 1) throw ConfigError("run.workers must be at least 1");
  if (!(cfg.canm.tau0 > 0 && cfg.canm.tau0 <= 1)) throw ConfigError("correct.tau0 must lie in (0,1]");
  if (cfg.canm.max_iter < 1 || cfg.refine_opts.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (cfg.catalog_digits < 1 || cfg.catalog_digits > cfg.classify.decimal_digits ||
      cfg.catalog_digits > cfg.verify.decimal_digits) {
    throw ConfigError("catalog.digits must not exceed the verify and classify precision");
  }
  if (cfg.verify_min_digits < 1 || cfg.verify_min_digits > cfg.refine.decimal_digits) {
    throw ConfigError("verify.min_digits must not exceed refine.digits");
  }
}

}  // namespace orbits
