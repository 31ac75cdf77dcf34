#pragma once

// Independent reference operations on syzygy words, shared by the unit tests
// and the acceptance run.

#include <algorithm>
#include <array>
#include <random>

#include "orbits/topology.hpp"

namespace orbits::test {

inline Letter random_letter(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> m(1, 3), s(0, 1);
  return {m(rng), s(rng) ? 1 : -1};
}

inline Word random_word(std::mt19937_64& rng, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  Word w(static_cast<std::size_t>(len(rng)));
  for (auto& l : w) l = random_letter(rng);
  return w;
}

// Deletes a randomly chosen cancelling pair until none is left.
inline Word reduce_in_random_order(Word w, std::mt19937_64& rng) {
  for (;;) {
    std::vector<std::size_t> spots;
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      if (w[i] == w[i + 1].inverse()) spots.push_back(i);
    if (spots.empty()) return w;
    const std::size_t i = spots[std::uniform_int_distribution<std::size_t>(0, spots.size() - 1)(rng)];
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i + 2));
  }
}

inline Word relabel(const Word& w, const std::array<int, 3>& perm) {
  Word out = w;
  for (auto& l : out) l.middle = perm[l.middle - 1];
  return out;
}

inline Word reversed(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (auto& l : out) l.sign = -l.sign;
  return out;
}

inline Word rotated(Word w, std::size_t k) {
  if (!w.empty()) std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k % w.size()), w.end());
  return w;
}

}  // namespace orbits::test
