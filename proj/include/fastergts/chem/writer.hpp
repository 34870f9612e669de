#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fastergts/chem/graph.hpp"

namespace fastergts::chem {

namespace detail {

inline std::string_view bond_symbol(const MolecularGraph& g, const Bond& b) {
  switch (b.order) {
    case BondOrder::single:
      return g.atoms[b.a].aromatic && g.atoms[b.b].aromatic ? "-" : "";
    case BondOrder::double_: return "=";
    case BondOrder::triple: return "#";
    case BondOrder::aromatic: return "";
  }
  return "";
}

inline void append_ring_label(std::string& out, int label) {
  if (label < 10) {
    out += static_cast<char>('0' + label);
  } else {
    out += '%';
    out += static_cast<char>('0' + label / 10);
    out += static_cast<char>('0' + label % 10);
  }
}

/// Depth-first SMILES emission. Traversal starts at the lowest-ranked atom
/// and visits neighbours in ascending rank, so a total order on atoms fixes
/// the output string.
inline std::string emit_smiles(const MolecularGraph& g, const Adjacency& adj, const std::vector<int>& rank) {
  const std::size_t n = g.atoms.size();
  if (n == 0) return {};
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<std::vector<Neighbor>> sorted(n);
  for (std::size_t a = 0; a < n; ++a) {
    sorted[a] = adj[a];
    std::sort(sorted[a].begin(), sorted[a].end(),
              [&](const Neighbor& x, const Neighbor& y) { return rank[x.atom] < rank[y.atom]; });
  }
  std::size_t start = 0;
  for (std::size_t a = 1; a < n; ++a) {
    if (rank[a] < rank[start]) start = a;
  }

  // Pass 1: spanning tree and ring-closure bonds.
  std::vector<std::size_t> order_of(n, kNone);
  std::vector<std::vector<Neighbor>> children(n);
  std::vector<bool> ring_bond(g.bonds.size(), false);
  std::vector<std::vector<std::size_t>> ring_bonds_at(n);
  std::size_t counter = 0;
  std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t a, std::size_t parent_bond) {
    order_of[a] = counter++;
    for (const Neighbor& nb : sorted[a]) {
      if (nb.bond == parent_bond) continue;
      if (order_of[nb.atom] == kNone) {
        children[a].push_back(nb);
        dfs(nb.atom, nb.bond);
      } else if (!ring_bond[nb.bond]) {
        ring_bond[nb.bond] = true;
        ring_bonds_at[a].push_back(nb.bond);
        ring_bonds_at[nb.atom].push_back(nb.bond);
      }
    }
  };
  dfs(start, kNone);

  // Pass 2: text.
  std::string out;
  std::vector<int> label_of(g.bonds.size(), 0);
  std::set<int> free_labels;
  int next_label = 1;
  std::function<void(std::size_t)> write = [&](std::size_t a) {
    const Atom& atom = g.atoms[a];
    out += symbol(atom.element, atom.aromatic);
    auto& rb = ring_bonds_at[a];
    std::sort(rb.begin(), rb.end(), [&](std::size_t x, std::size_t y) {
      return order_of[g.bonds[x].other(a)] < order_of[g.bonds[y].other(a)];
    });
    std::vector<int> released;
    for (std::size_t bi : rb) {
      const std::size_t other = g.bonds[bi].other(a);
      if (order_of[other] < order_of[a]) {
        append_ring_label(out, label_of[bi]);
        released.push_back(label_of[bi]);
      }
    }
    for (std::size_t bi : rb) {
      const std::size_t other = g.bonds[bi].other(a);
      if (order_of[other] > order_of[a]) {
        int label;
        if (!free_labels.empty()) {
          label = *free_labels.begin();
          free_labels.erase(free_labels.begin());
        } else {
          label = next_label++;
        }
        label_of[bi] = label;
        out += bond_symbol(g, g.bonds[bi]);
        append_ring_label(out, label);
      }
    }
    free_labels.insert(released.begin(), released.end());
    const auto& kids = children[a];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool branch = i + 1 < kids.size();
      if (branch) out += '(';
      out += bond_symbol(g, g.bonds[kids[i].bond]);
      write(kids[i].atom);
      if (branch) out += ')';
    }
  };
  write(start);
  return out;
}

using RankKey = std::tuple<int, std::vector<std::pair<int, int>>>;

/// Iterative neighbourhood refinement to a stable ordered partition. Ranks
/// are dense (0..k-1) and depend only on graph structure and input ranks.
inline std::vector<int> refine_ranks(const MolecularGraph& g, const Adjacency& adj, std::vector<int> rank) {
  const std::size_t n = g.atoms.size();
  std::vector<std::size_t> idx(n);
  std::size_t classes = 0;
  {
    std::vector<int> sorted = rank;
    std::sort(sorted.begin(), sorted.end());
    classes = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  }
  std::vector<RankKey> keys(n);
  while (true) {
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::pair<int, int>> nbrs;
      nbrs.reserve(adj[a].size());
      for (const auto& nb : adj[a]) nbrs.emplace_back(rank[nb.atom], static_cast<int>(g.bonds[nb.bond].order));
      std::sort(nbrs.begin(), nbrs.end());
      keys[a] = RankKey{rank[a], std::move(nbrs)};
    }
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
    std::vector<int> next(n);
    int cls = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && keys[idx[i]] != keys[idx[i - 1]]) ++cls;
      next[idx[i]] = cls;
    }
    const std::size_t new_classes = n == 0 ? 0 : static_cast<std::size_t>(cls) + 1;
    rank = std::move(next);
    if (new_classes == classes) break;
    classes = new_classes;
  }
  return rank;
}

inline std::vector<int> initial_ranks(const MolecularGraph& g, const Adjacency& adj) {
  using Inv = std::tuple<int, int, int, int, int>;
  const std::size_t n = g.atoms.size();
  std::vector<Inv> inv(n);
  for (std::size_t a = 0; a < n; ++a) {
    const Atom& atom = g.atoms[a];
    inv[a] = Inv{static_cast<int>(atom.element), atom.aromatic ? 1 : 0, static_cast<int>(adj[a].size()),
                 atom.implicit_h, g.in_ring.empty() ? 0 : static_cast<int>(g.in_ring[a])};
  }
  std::vector<Inv> sorted = inv;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> rank(n);
  for (std::size_t a = 0; a < n; ++a) {
    rank[a] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), inv[a]) - sorted.begin());
  }
  return rank;
}

/// True when swapping atoms x and y (same cell) fixes everything else.
inline bool are_twins(const Adjacency& adj, const MolecularGraph& g, std::size_t x, std::size_t y) {
  auto signature = [&](std::size_t a, std::size_t skip) {
    std::vector<std::pair<std::size_t, int>> s;
    for (const auto& nb : adj[a]) {
      if (nb.atom != skip) s.emplace_back(nb.atom, static_cast<int>(g.bonds[nb.bond].order));
    }
    std::sort(s.begin(), s.end());
    return s;
  };
  return g.atoms[x] == g.atoms[y] && signature(x, y) == signature(y, x);
}

}  // namespace detail

/// SMILES for the graph following its own atom order (DFS from atom 0).
inline std::string write_smiles(const MolecularGraph& g) {
  std::vector<int> rank(g.atoms.size());
  std::iota(rank.begin(), rank.end(), 0);
  return detail::emit_smiles(g, adjacency(g), rank);
}

/// Canonical SMILES: invariant-based refinement, then individualisation of
/// tied atoms; the lexicographically smallest emission over all branches of
/// the search is returned. Tied atoms that are structural twins are explored
/// once, since swapping them is an automorphism.
inline std::string canonical_form(const MolecularGraph& g) {
  const std::size_t n = g.atoms.size();
  if (n == 0) return {};
  const Adjacency adj = adjacency(g);
  std::optional<std::string> best;

  std::function<void(const std::vector<int>&)> search = [&](const std::vector<int>& ranks) {
    // First non-singleton cell in rank order.
    std::vector<std::size_t> count(n, 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    int target = -1;
    for (std::size_t r = 0; r < n; ++r) {
      if (count[r] > 1) {
        target = static_cast<int>(r);
        break;
      }
    }
    if (target < 0) {
      std::string s = detail::emit_smiles(g, adj, ranks);
      if (!best || s < *best) best = std::move(s);
      return;
    }
    std::vector<std::size_t> cell;
    for (std::size_t a = 0; a < n; ++a) {
      if (ranks[a] == target) cell.push_back(a);
    }
    std::vector<std::size_t> reps;
    for (std::size_t a : cell) {
      bool twin = false;
      for (std::size_t r : reps) {
        if (detail::are_twins(adj, g, a, r)) {
          twin = true;
          break;
        }
      }
      if (!twin) reps.push_back(a);
    }
    for (std::size_t x : reps) {
      std::vector<int> next(n);
      for (std::size_t a = 0; a < n; ++a) next[a] = 2 * ranks[a] + (a == x ? 0 : 1);
      search(detail::refine_ranks(g, adj, std::move(next)));
    }
  };
  search(detail::refine_ranks(g, adj, detail::initial_ranks(g, adj)));
  return *best;
}

}  // namespace fastergts::chem
