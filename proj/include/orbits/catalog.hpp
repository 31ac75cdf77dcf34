#pragma once

// Solution records, scale-invariant periods, deduplication and family tables.
//
// A catalog file holds one JSON object per line. Solution records carry the
// fields listed in SolutionRecord in a fixed order; every numeric value is a
// decimal string. Lines that describe a per-record failure carry a "failure"
// reason code instead of a signature. Leading lines starting with '#' are
// headers and are ignored by the reader.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orbits/correct.hpp"
#include "orbits/precision.hpp"
#include "orbits/topology.hpp"

namespace orbits {

inline constexpr int kCatalogVersion = 1;

struct SolutionRecord {
  std::string vx;
  std::string vy;
  std::string T;
  std::string T_star;
  std::string energy;
  std::string residual_norm;
  int agreed_digits = 0;
  std::string signature;  // canonical word, e.g. "1+2-3+"
  std::string f2_word;
  int word_length = 0;
  std::optional<std::string> satellite_of;  // canonical root signature
  std::string provenance;
  // fields this version does not know, as (name, JSON text), in file order
  std::vector<std::pair<std::string, std::string>> extra;

  bool operator==(const SolutionRecord&) const = default;
};

struct FailureRecord {
  std::string reason;  // collision, step_underflow, step_limit, diverged, unverified, ambiguous_topology, ...
  std::string vx;
  std::string vy;
  std::string T;
  std::string detail;
  std::string provenance;

  bool operator==(const FailureRecord&) const = default;
};

struct Catalog {
  std::vector<SolutionRecord> records;
  std::vector<FailureRecord> failures;
};

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// E = -2.5 + 3 (vx^2 + vy^2), the energy of the symmetric initial state.
Real initial_energy(const Real& vx, const Real& vy);

/// T |E|^(3/2). Throws std::domain_error when |E| < 1e-10.
Real scale_invariant_period(const Real& vx, const Real& vy, const Real& T);

/// Builds a record from a refined triplet. Values are written with `digits`
/// significant digits; energy and T* are computed from the written vx, vy, T
/// so that they can be recomputed exactly from the record.
SolutionRecord make_record(const Triplet& t, const Real& residual_norm, int agreed_digits, const Signature& sig,
                           int digits, std::string provenance = {});

/// Recomputes energy and T* from the stored vx, vy, T and compares them with
/// the stored strings to within two units of their last digit. Returns an
/// empty string on success, otherwise a description of the mismatch.
std::string check_record(const SolutionRecord& r);

std::string format_record(const SolutionRecord& r);
std::string format_failure(const FailureRecord& f);

/// One catalog line; exactly one of the two results is set.
struct CatalogLine {
  std::optional<SolutionRecord> record;
  std::optional<FailureRecord> failure;
};
CatalogLine parse_catalog_line(const std::string& line);

void write_catalog(std::ostream& out, const Catalog& c, const std::string& header = {});
/// Throws CatalogError naming the line on malformed input, a version
/// mismatch, or (when `validate`) a record failing check_record.
Catalog read_catalog(std::istream& in, bool validate = true);

struct DedupConflict {
  std::size_t a;  // indices into the input
  std::size_t b;
  std::string message;
};

struct DedupResult {
  std::vector<SolutionRecord> solutions;        // sorted by (T*, vx, vy)
  std::vector<std::vector<std::size_t>> groups;  // input indices per solution
  std::vector<DedupConflict> conflicts;
};

/// Groups records whose T* agree to relative `tol_tstar` and whose canonical
/// signatures are equal. Equal T* with different signatures is reported as a
/// conflict and never merged. The representative of a group is the record
/// with the smallest (vx, vy).
DedupResult dedup_solutions(const std::vector<SolutionRecord>& records, const std::string& tol_tstar = "1e-40");

struct Family {
  std::string signature;
  std::optional<std::string> satellite_of;
  std::size_t members = 0;
  SolutionRecord representative;  // smallest T*
};

struct FamilyTable {
  std::vector<Family> families;  // sorted by signature
  std::size_t root_families = 0;  // families that are not satellites
};

FamilyTable group_families(const std::vector<SolutionRecord>& records);

}  // namespace orbits
