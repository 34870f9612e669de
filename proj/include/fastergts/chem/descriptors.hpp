#pragma once

#include <array>
#include <cstddef>

#include "fastergts/chem/graph.hpp"

namespace fastergts::chem {

inline constexpr std::size_t kDescriptorLength = 8;
using Descriptors = std::array<double, kDescriptorLength>;

/// [C, N, O, other heavy, aromatic atoms, cycle rank, branch count, heavy
/// atoms] as fractions of the heavy-atom total; the last entry is the heavy
/// atom total over 50. Branch count sums max(0, degree - 2) over atoms.
inline Descriptors descriptors(const MolecularGraph& g) {
  Descriptors d{};
  const std::size_t n = g.atoms.size();
  if (n == 0) return d;
  std::vector<int> degree(n, 0);
  for (const auto& b : g.bonds) {
    ++degree[b.a];
    ++degree[b.b];
  }
  double c = 0, nitrogen = 0, o = 0, other = 0, aromatic = 0, branches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    switch (g.atoms[i].element) {
      case Element::C: ++c; break;
      case Element::N: ++nitrogen; break;
      case Element::O: ++o; break;
      default: ++other; break;
    }
    if (g.atoms[i].aromatic) ++aromatic;
    if (degree[i] > 2) branches += degree[i] - 2;
  }
  const double total = static_cast<double>(n);
  d[0] = c / total;
  d[1] = nitrogen / total;
  d[2] = o / total;
  d[3] = other / total;
  d[4] = aromatic / total;
  d[5] = static_cast<double>(g.ring_count()) / total;
  d[6] = branches / total;
  d[7] = total / 50.0;
  return d;
}

}  // namespace fastergts::chem
