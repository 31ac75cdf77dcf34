#pragma once

// Topological classification of periodic orbits.
//
// A period is reduced to its syzygy sequence: every instant at which the three
// bodies become collinear contributes a letter (middle body, crossing sign).
// Inverse letters (same middle, opposite sign, adjacent) cancel, so the
// sequence is a word in the free group on the three syzygy types; the family
// is the conjugacy class of that word up to relabelling the bodies and
// reversing the orientation.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "orbits/correct.hpp"
#include "orbits/precision.hpp"

namespace orbits {

struct Letter {
  int middle = 1;  // 1, 2 or 3
  int sign = 1;    // +1 or -1

  bool operator==(const Letter&) const = default;
  // (1,+) < (1,-) < (2,+) < (2,-) < (3,+) < (3,-)
  int key() const { return 2 * (middle - 1) + (sign < 0 ? 1 : 0); }
  Letter inverse() const { return {middle, -sign}; }
};

using Word = std::vector<Letter>;

struct SyzygyEvent {
  Real t;
  int middle = 1;
  int sign = 1;
};

class AmbiguousTopology : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyzygyOptions {
  int samples_per_step = 8;
};

/// Syzygies of the orbit through initial_state(v) over one period [0, T).
/// The collinear start is the first event; roots near T are identified with it.
std::vector<SyzygyEvent> detect_syzygies(const VelocityPair<Real>& v, const Real& T, const PrecisionConfig& cfg,
                                         const SyzygyOptions& opts = {});

Word to_word(const std::vector<SyzygyEvent>& events);

/// Removes adjacent inverse pairs until none remain.
Word free_reduce(const Word& w);
/// Strips inverse first/last pairs of a freely reduced word.
Word cyclic_reduce(const Word& w);

/// Lexicographically least representative over body relabellings, cyclic
/// rotations and (optionally) orientation reversal.
Word canonical_signature(const Word& cyclic_word, bool include_reversal = true);

/// Image in F2 = <a, b> under 1 -> a^s, 2 -> b^s, 3 -> (ab)^-s, freely and
/// cyclically reduced; upper case marks inverses.
std::string to_f2_word(const Word& cyclic_word);

struct SatelliteInfo {
  bool satellite = false;
  Word root;
  int power = 1;
};

/// True when the cyclic word is w^k for a shorter w and k >= 2.
SatelliteInfo is_satellite(const Word& cyclic_word);

struct Signature {
  Word raw;
  Word reduced;    // freely reduced
  Word cyclic;     // cyclically reduced
  Word canonical;
  int word_length = 0;  // length of the freely reduced word
};

Signature make_signature(const Word& raw, bool include_reversal = true);

// "1+2-3+"
std::string format_word(const Word& w);
Word parse_word(std::string_view text);

}  // namespace orbits
