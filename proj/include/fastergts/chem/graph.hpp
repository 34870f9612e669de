#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "fastergts/chem/token.hpp"

namespace fastergts::chem {

enum class Element : std::uint8_t { B, C, N, O, P, S, F, Cl, Br, I };

inline constexpr std::array<Element, 10> kAllElements = {
    Element::B, Element::C, Element::N, Element::O, Element::P,
    Element::S, Element::F, Element::Cl, Element::Br, Element::I};

struct ElementInfo {
  std::string_view symbol;
  std::string_view aromatic_symbol;  // empty when the element has no aromatic form
  std::array<int, 2> valences;       // ascending; second entry 0 when unused
};

inline const ElementInfo& element_info(Element e) {
  static constexpr std::array<ElementInfo, 10> table = {{
      {"B", "", {3, 0}},
      {"C", "c", {4, 0}},
      {"N", "n", {3, 0}},
      {"O", "o", {2, 0}},
      {"P", "", {3, 5}},
      {"S", "s", {2, 6}},
      {"F", "", {1, 0}},
      {"Cl", "", {1, 0}},
      {"Br", "", {1, 0}},
      {"I", "", {1, 0}},
  }};
  return table[static_cast<std::size_t>(e)];
}

inline std::string_view symbol(Element e, bool aromatic) {
  const auto& info = element_info(e);
  return aromatic ? info.aromatic_symbol : info.symbol;
}

/// Largest valence the element may take.
inline int max_valence(Element e) {
  const auto& v = element_info(e).valences;
  return std::max(v[0], v[1]);
}

/// Maps an atom token text to (element, aromatic).
inline std::optional<std::pair<Element, bool>> element_from_symbol(std::string_view text) {
  for (Element e : kAllElements) {
    const auto& info = element_info(e);
    if (text == info.symbol) return std::pair{e, false};
    if (!info.aromatic_symbol.empty() && text == info.aromatic_symbol) return std::pair{e, true};
  }
  return std::nullopt;
}

enum class BondOrder : std::uint8_t { single = 1, double_ = 2, triple = 3, aromatic = 4 };

/// Bond contribution to valence in half units (aromatic = 3 halves).
inline int half_valence(BondOrder order) {
  switch (order) {
    case BondOrder::single: return 2;
    case BondOrder::double_: return 4;
    case BondOrder::triple: return 6;
    case BondOrder::aromatic: return 3;
  }
  return 0;
}

struct Atom {
  Element element = Element::C;
  bool aromatic = false;
  int implicit_h = 0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::single;

  std::size_t other(std::size_t atom) const { return atom == a ? b : a; }
  friend bool operator==(const Bond&, const Bond&) = default;
};

/// Validated structural form of a SMILES string. Instances returned by the
/// parser or by sanitize() are connected, satisfy valence caps, and carry
/// per-atom implicit hydrogen counts and ring membership.
struct MolecularGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<bool> in_ring;

  std::size_t atom_count() const { return atoms.size(); }
  std::size_t bond_count() const { return bonds.size(); }

  /// Cycle rank of a connected graph.
  std::size_t ring_count() const {
    return atoms.empty() ? 0 : bonds.size() + 1 - atoms.size();
  }
};

struct Neighbor {
  std::size_t atom;
  std::size_t bond;
};

using Adjacency = std::vector<std::vector<Neighbor>>;

inline Adjacency adjacency(const MolecularGraph& g) {
  Adjacency adj(g.atoms.size());
  for (std::size_t i = 0; i < g.bonds.size(); ++i) {
    adj[g.bonds[i].a].push_back({g.bonds[i].b, i});
    adj[g.bonds[i].b].push_back({g.bonds[i].a, i});
  }
  return adj;
}

inline std::optional<std::size_t> find_bond(const MolecularGraph& g, std::size_t a, std::size_t b) {
  for (std::size_t i = 0; i < g.bonds.size(); ++i) {
    const auto& bond = g.bonds[i];
    if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a)) return i;
  }
  return std::nullopt;
}

/// Bridge flags per bond (Tarjan lowlink, iterative).
inline std::vector<bool> find_bridges(const MolecularGraph& g, const Adjacency& adj) {
  const std::size_t n = g.atoms.size();
  std::vector<bool> bridge(g.bonds.size(), false);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  struct Frame {
    std::size_t atom;
    std::size_t parent_bond;
    std::size_t next;
  };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  for (std::size_t start = 0; start < n; ++start) {
    if (disc[start] >= 0) continue;
    std::vector<Frame> stack{{start, kNone, 0}};
    disc[start] = low[start] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.atom].size()) {
        const Neighbor nb = adj[f.atom][f.next++];
        if (nb.bond == f.parent_bond) continue;
        if (disc[nb.atom] < 0) {
          disc[nb.atom] = low[nb.atom] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          Frame& parent = stack.back();
          low[parent.atom] = std::min(low[parent.atom], low[done.atom]);
          if (low[done.atom] > disc[parent.atom]) bridge[done.parent_bond] = true;
        }
      }
    }
  }
  return bridge;
}

inline bool is_connected(const MolecularGraph& g, const Adjacency& adj) {
  if (g.atoms.empty()) return false;
  std::vector<bool> seen(g.atoms.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t a = stack.back();
    stack.pop_back();
    for (const auto& nb : adj[a]) {
      if (!seen[nb.atom]) {
        seen[nb.atom] = true;
        ++count;
        stack.push_back(nb.atom);
      }
    }
  }
  return count == g.atoms.size();
}

/// Error from graph-level checks; `atom` indexes g.atoms (or a bond's first
/// endpoint for structural errors).
struct GraphError {
  ErrorCode code;
  std::size_t atom;
};

/// Recomputes ring membership and implicit hydrogens, then checks the graph
/// invariants. Aromatic bonds that turn out to be bridges are demoted to
/// single bonds (an aromatic bond only exists inside a ring).
inline std::optional<GraphError> sanitize(MolecularGraph& g) {
  const std::size_t n = g.atoms.size();
  if (n == 0) return GraphError{ErrorCode::grammar, 0};
  for (std::size_t i = 0; i < g.bonds.size(); ++i) {
    const auto& b = g.bonds[i];
    if (b.a >= n || b.b >= n || b.a == b.b) return GraphError{ErrorCode::grammar, std::min(b.a, n - 1)};
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = g.bonds[j];
      if ((o.a == b.a && o.b == b.b) || (o.a == b.b && o.b == b.a)) return GraphError{ErrorCode::grammar, b.a};
    }
  }
  const Adjacency adj = adjacency(g);
  if (!is_connected(g, adj)) return GraphError{ErrorCode::grammar, 0};

  const std::vector<bool> bridge = find_bridges(g, adj);
  g.in_ring.assign(n, false);
  for (std::size_t i = 0; i < g.bonds.size(); ++i) {
    auto& b = g.bonds[i];
    if (bridge[i]) {
      if (b.order == BondOrder::aromatic) b.order = BondOrder::single;
    } else {
      g.in_ring[b.a] = true;
      g.in_ring[b.b] = true;
    }
  }

  std::vector<int> halves(n, 0);
  for (const auto& b : g.bonds) {
    if (b.order == BondOrder::aromatic && !(g.atoms[b.a].aromatic && g.atoms[b.b].aromatic)) {
      return GraphError{ErrorCode::grammar, b.a};
    }
    halves[b.a] += half_valence(b.order);
    halves[b.b] += half_valence(b.order);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& atom = g.atoms[i];
    if (atom.aromatic && element_info(atom.element).aromatic_symbol.empty()) {
      return GraphError{ErrorCode::grammar, i};
    }
    const int used = (halves[i] + 1) / 2;
    const auto& allowed = element_info(atom.element).valences;
    int target = -1;
    for (int v : allowed) {
      if (v >= used && v > 0) {
        target = v;
        break;
      }
    }
    if (target < 0) return GraphError{ErrorCode::valence, i};
    atom.implicit_h = target - used;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.atoms[i].aromatic && !g.in_ring[i]) return GraphError{ErrorCode::aromatic_acyclic, i};
  }
  return std::nullopt;
}

/// Relabels atoms so that old atom i becomes new atom perm[i]. Bond list
/// order is preserved.
inline MolecularGraph permute_atoms(const MolecularGraph& g, std::span<const std::size_t> perm) {
  if (perm.size() != g.atoms.size()) throw std::invalid_argument("permute_atoms: size mismatch");
  MolecularGraph out;
  out.atoms.resize(g.atoms.size());
  out.in_ring.resize(g.atoms.size());
  for (std::size_t i = 0; i < g.atoms.size(); ++i) {
    out.atoms[perm[i]] = g.atoms[i];
    out.in_ring[perm[i]] = g.in_ring.empty() ? false : static_cast<bool>(g.in_ring[i]);
  }
  out.bonds.reserve(g.bonds.size());
  for (const auto& b : g.bonds) out.bonds.push_back({perm[b.a], perm[b.b], b.order});
  return out;
}

/// Sum of bond orders around an atom in half units.
inline int bonded_halves(const MolecularGraph& g, std::size_t atom) {
  int total = 0;
  for (const auto& b : g.bonds) {
    if (b.a == atom || b.b == atom) total += half_valence(b.order);
  }
  return total;
}

}  // namespace fastergts::chem
