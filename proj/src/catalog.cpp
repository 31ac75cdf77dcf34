#include "orbits/catalog.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <json.hpp>
#include <numeric>
#include <ostream>

namespace orbits {

namespace {

using json = nlohmann::ordered_json;

const char* const kKnownFields[] = {"version", "vx", "vy", "T", "T_star", "energy", "residual_norm", "agreed_digits",
                                    "signature", "f2_word", "word_length", "satellite_of", "provenance"};

bool is_known(const std::string& key) {
  return std::find(std::begin(kKnownFields), std::end(kKnownFields), key) != std::end(kKnownFields);
}

// Working precision comfortably above every stored decimal.
ArithmeticContext context_for(std::initializer_list<const std::string*> fields) {
  int digits = ArithmeticContext::kMinDigits;
  for (const std::string* f : fields) digits = std::max(digits, significant_digits(*f));
  return make_context(digits + 10);
}

struct Key {
  Real tstar;
  Real vx;
  Real vy;
  std::string text;  // final tie-break, makes the order total
};

Key key_of(const SolutionRecord& r) {
  const ArithmeticContext ctx = context_for({&r.T_star, &r.vx, &r.vy});
  return {ctx.parse(r.T_star), ctx.parse(r.vx), ctx.parse(r.vy), format_record(r)};
}

bool key_less(const Key& a, const Key& b) {
  if (a.tstar != b.tstar) return a.tstar < b.tstar;
  if (a.vx != b.vx) return a.vx < b.vx;
  if (a.vy != b.vy) return a.vy < b.vy;
  return a.text < b.text;
}

bool velocity_less(const Key& a, const Key& b) {
  if (a.vx != b.vx) return a.vx < b.vx;
  if (a.vy != b.vy) return a.vy < b.vy;
  return a.text < b.text;
}

std::string mismatch(const char* name, const Real& recomputed, const std::string& stored) {
  const int d = significant_digits(stored);
  const ArithmeticContext ctx = make_context(std::max(ArithmeticContext::kMinDigits, d + 10));
  const Real s = ctx.parse(stored);
  const Real bound = abs(s) * pow10(1 - d, s) * 2;
  if (abs(recomputed - s) <= bound) return {};
  return std::string(name) + " " + stored + " does not match recomputed " + format_decimal(recomputed, d);
}

const std::string& string_field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw CatalogError(std::string("missing field '") + name + "'");
  if (!it->is_string()) throw CatalogError(std::string("field '") + name + "' must be a string");
  return it->get_ref<const std::string&>();
}

int int_field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw CatalogError(std::string("missing field '") + name + "'");
  if (!it->is_number_integer()) throw CatalogError(std::string("field '") + name + "' must be an integer");
  return it->get<int>();
}

void require_decimal(const std::string& s, const char* name) {
  try {
    parse_decimal(s, make_context(std::max(ArithmeticContext::kMinDigits, significant_digits(s) + 2)));
  } catch (const std::exception&) {
    throw CatalogError(std::string("field '") + name + "' is not a decimal string: '" + s + "'");
  }
}

}  // namespace

Real initial_energy(const Real& vx, const Real& vy) { return initial_energy_formula(VelocityPair<Real>{vx, vy}); }

Real scale_invariant_period(const Real& vx, const Real& vy, const Real& T) {
  const Real e = abs(initial_energy(vx, vy));
  if (e < Real(1e-10)) throw std::domain_error("scale-invariant period undefined at zero energy");
  return T * e * sqrt(e);
}

SolutionRecord make_record(const Triplet& t, const Real& residual_norm, int agreed_digits, const Signature& sig,
                           int digits, std::string provenance) {
  SolutionRecord r;
  r.vx = format_decimal(t.vx, digits);
  r.vy = format_decimal(t.vy, digits);
  r.T = format_decimal(t.T, digits);
  const ArithmeticContext ctx = make_context(std::max(ArithmeticContext::kMinDigits, digits + 10));
  const Real vx = ctx.parse(r.vx), vy = ctx.parse(r.vy), T = ctx.parse(r.T);
  r.energy = format_decimal(initial_energy(vx, vy), digits);
  r.T_star = format_decimal(scale_invariant_period(vx, vy, T), digits);
  r.residual_norm = format_decimal(residual_norm, 6);
  r.agreed_digits = agreed_digits;
  r.signature = format_word(sig.canonical);
  r.f2_word = to_f2_word(sig.cyclic);
  r.word_length = sig.word_length;
  const SatelliteInfo sat = is_satellite(sig.cyclic);
  if (sat.satellite) r.satellite_of = format_word(canonical_signature(sat.root));
  r.provenance = std::move(provenance);
  return r;
}

std::string check_record(const SolutionRecord& r) {
  const ArithmeticContext ctx = context_for({&r.vx, &r.vy, &r.T, &r.energy, &r.T_star});
  const Real vx = ctx.parse(r.vx), vy = ctx.parse(r.vy), T = ctx.parse(r.T);
  std::string m = mismatch("energy", initial_energy(vx, vy), r.energy);
  if (!m.empty()) return m;
  try {
    return mismatch("T_star", scale_invariant_period(vx, vy, T), r.T_star);
  } catch (const std::domain_error& e) {
    return e.what();
  }
}

std::string format_record(const SolutionRecord& r) {
  json j;
  j["version"] = kCatalogVersion;
  j["vx"] = r.vx;
  j["vy"] = r.vy;
  j["T"] = r.T;
  j["T_star"] = r.T_star;
  j["energy"] = r.energy;
  j["residual_norm"] = r.residual_norm;
  j["agreed_digits"] = r.agreed_digits;
  j["signature"] = r.signature;
  j["f2_word"] = r.f2_word;
  j["word_length"] = r.word_length;
  j["satellite_of"] = r.satellite_of ? json(*r.satellite_of) : json(nullptr);
  j["provenance"] = r.provenance;
  for (const auto& [key, value] : r.extra) j[key] = json::parse(value);
  return j.dump();
}

std::string format_failure(const FailureRecord& f) {
  json j;
  j["version"] = kCatalogVersion;
  j["failure"] = f.reason;
  j["vx"] = f.vx;
  j["vy"] = f.vy;
  j["T"] = f.T;
  j["detail"] = f.detail;
  j["provenance"] = f.provenance;
  return j.dump();
}

CatalogLine parse_catalog_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CatalogError(std::string("not a JSON object: ") + e.what());
  }
  if (!j.is_object()) throw CatalogError("not a JSON object");
  const int version = int_field(j, "version");
  if (version != kCatalogVersion) {
    throw CatalogError("catalog version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCatalogVersion) + ")");
  }

  CatalogLine out;
  if (j.contains("failure")) {
    FailureRecord f;
    f.reason = string_field(j, "failure");
    f.vx = string_field(j, "vx");
    f.vy = string_field(j, "vy");
    f.T = string_field(j, "T");
    f.detail = j.contains("detail") ? string_field(j, "detail") : "";
    f.provenance = j.contains("provenance") ? string_field(j, "provenance") : "";
    out.failure = std::move(f);
    return out;
  }

  SolutionRecord r;
  r.vx = string_field(j, "vx");
  r.vy = string_field(j, "vy");
  r.T = string_field(j, "T");
  r.T_star = string_field(j, "T_star");
  r.energy = string_field(j, "energy");
  r.residual_norm = string_field(j, "residual_norm");
  for (const auto* s : {&r.vx, &r.vy, &r.T, &r.T_star, &r.energy, &r.residual_norm}) require_decimal(*s, "numeric");
  r.agreed_digits = int_field(j, "agreed_digits");
  r.signature = string_field(j, "signature");
  try {
    parse_word(r.signature);
  } catch (const std::invalid_argument& e) {
    throw CatalogError(std::string("field 'signature': ") + e.what());
  }
  r.f2_word = string_field(j, "f2_word");
  r.word_length = int_field(j, "word_length");
  const auto sat = j.find("satellite_of");
  if (sat == j.end()) throw CatalogError("missing field 'satellite_of'");
  if (!sat->is_null()) {
    if (!sat->is_string()) throw CatalogError("field 'satellite_of' must be a string or null");
    r.satellite_of = sat->get<std::string>();
  }
  r.provenance = string_field(j, "provenance");
  for (const auto& [key, value] : j.items()) {
    if (!is_known(key)) r.extra.emplace_back(key, value.dump());
  }
  out.record = std::move(r);
  return out;
}

void write_catalog(std::ostream& out, const Catalog& c, const std::string& header) {
  if (!header.empty()) out << header << '\n';
  for (const auto& r : c.records) out << format_record(r) << '\n';
  for (const auto& f : c.failures) out << format_failure(f) << '\n';
}

Catalog read_catalog(std::istream& in, bool validate) {
  Catalog c;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      CatalogLine parsed = parse_catalog_line(line);
      if (parsed.failure) {
        c.failures.push_back(std::move(*parsed.failure));
        continue;
      }
      if (validate) {
        const std::string m = check_record(*parsed.record);
        if (!m.empty()) throw CatalogError(m);
      }
      c.records.push_back(std::move(*parsed.record));
    } catch (const std::exception& e) {
      throw CatalogError("catalog line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

DedupResult dedup_solutions(const std::vector<SolutionRecord>& records, const std::string& tol_tstar) {
  std::vector<Key> keys;
  keys.reserve(records.size());
  for (const auto& r : records) keys.push_back(key_of(r));
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key_less(keys[a], keys[b]); });

  const Real tol = parse_decimal(tol_tstar, make_context(ArithmeticContext::kMinDigits));
  auto close = [&](std::size_t a, std::size_t b) {
    const Real& x = keys[a].tstar;
    const Real& y = keys[b].tstar;
    return abs(x - y) < tol * max(abs(x), abs(y));
  };

  DedupResult res;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t begin = 0; begin < order.size();) {
    std::size_t end = begin + 1;
    while (end < order.size() && close(order[end - 1], order[end])) ++end;

    // one group per signature inside this T* cluster, in order of first appearance
    std::vector<std::pair<std::string, std::vector<std::size_t>>> by_sig;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t idx = order[k];
      auto it = std::find_if(by_sig.begin(), by_sig.end(),
                             [&](const auto& g) { return g.first == records[idx].signature; });
      if (it == by_sig.end()) {
        by_sig.push_back({records[idx].signature, {idx}});
      } else {
        it->second.push_back(idx);
      }
    }
    for (std::size_t g = 1; g < by_sig.size(); ++g) {
      const std::size_t a = by_sig[0].second.front(), b = by_sig[g].second.front();
      res.conflicts.push_back({a, b,
                               "T* " + records[a].T_star + " matches within tolerance but signatures differ (" +
                                   records[a].signature + " vs " + records[b].signature + ")"});
    }
    for (auto& g : by_sig) groups.push_back(std::move(g.second));
    begin = end;
  }

  std::vector<std::size_t> reps;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    reps.push_back(*std::min_element(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
      return velocity_less(keys[a], keys[b]);
    }));
  }
  std::vector<std::size_t> sol_order(groups.size());
  std::iota(sol_order.begin(), sol_order.end(), std::size_t{0});
  std::sort(sol_order.begin(), sol_order.end(),
            [&](std::size_t a, std::size_t b) { return key_less(keys[reps[a]], keys[reps[b]]); });
  for (std::size_t s : sol_order) {
    res.solutions.push_back(records[reps[s]]);
    res.groups.push_back(groups[s]);
  }
  return res;
}

FamilyTable group_families(const std::vector<SolutionRecord>& records) {
  std::map<std::string, std::vector<std::size_t>> by_sig;
  for (std::size_t i = 0; i < records.size(); ++i) by_sig[records[i].signature].push_back(i);

  FamilyTable table;
  for (const auto& [sig, members] : by_sig) {
    Family f;
    f.signature = sig;
    f.members = members.size();
    std::size_t best = members.front();
    Key best_key = key_of(records[best]);
    for (std::size_t k = 1; k < members.size(); ++k) {
      Key kk = key_of(records[members[k]]);
      if (key_less(kk, best_key)) {
        best = members[k];
        best_key = std::move(kk);
      }
    }
    f.representative = records[best];
    for (std::size_t m : members) {
      if (records[m].satellite_of) f.satellite_of = records[m].satellite_of;
    }
    if (!f.satellite_of) ++table.root_families;
    table.families.push_back(std::move(f));
  }
  return table;
}

}  // namespace orbits
