#pragma once

#include <map>
#include <utility>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace orbits::text {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Whitespace-separated tokens; anything after a lone "#" token is returned in
// `comment` (without the marker).
inline std::vector<std::string> tokens(const std::string& line, std::string* comment = nullptr) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    if (tok == "#") {
      if (comment) {
        std::getline(in >> std::ws, *comment);
      }
      break;
    }
    out.push_back(tok);
  }
  return out;
}

// "# kind key=value key=value" -> map; throws if the kind does not match.
inline std::map<std::string, std::string> header_fields(const std::string& line, const std::string& kind) {
  const auto toks = tokens(line.size() > 1 && line[0] == '#' ? line.substr(1) : std::string());
  if (line.empty() || line[0] != '#' || toks.empty() || toks[0] != kind) {
    throw FormatError("expected a '# " + kind + "' header, got: " + line);
  }
  std::map<std::string, std::string> fields;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string::npos) throw FormatError("malformed header field '" + toks[i] + "'");
    fields[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
  }
  return fields;
}

inline const std::string& require(const std::map<std::string, std::string>& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw FormatError("missing header field '" + key + "'");
  return it->second;
}

inline int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw FormatError("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw FormatError("not an integer: '" + s + "'");
  return v;
}

// "k/K" with 0 <= k < K
inline std::pair<int, int> parse_shard(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw FormatError("shard must be index/count, got '" + s + "'");
  const int k = to_int(s.substr(0, slash));
  const int n = to_int(s.substr(slash + 1));
  if (n < 1 || k < 0 || k >= n) throw FormatError("shard index out of range: '" + s + "'");
  return {k, n};
}

}  // namespace orbits::text
