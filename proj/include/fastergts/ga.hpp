#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastergts/chem.hpp"
#include "fastergts/policy.hpp"
#include "fastergts/queue.hpp"
#include "fastergts/rng.hpp"

namespace fastergts::ga {

using chem::MolecularGraph;

struct GaConfig {
  std::size_t population = 32;
  double crossover_rate = 0.8;
  double mutation_rate = 0.3;
  std::size_t max_attempts = 20;

  void validate() const {
    if (population < 2 || population % 2 != 0) throw std::invalid_argument("ga population must be even and >= 2");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw std::invalid_argument("ga crossover_rate must be in [0, 1]");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw std::invalid_argument("ga mutation_rate must be in [0, 1]");
    if (max_attempts == 0) throw std::invalid_argument("ga max_attempts must be >= 1");
  }
};

/// Atom origin in a crossover child: which parent (0 = a, 1 = b) and the
/// atom index inside that parent.
struct AtomOrigin {
  int parent = 0;
  std::size_t atom = 0;
};

struct TracedChild {
  MolecularGraph graph;
  std::vector<AtomOrigin> origin;
};

namespace detail {

inline bool within_token_limit(const MolecularGraph& g) {
  std::vector<chem::Token> toks;
  return !chem::try_tokenize(chem::write_smiles(g), toks) && toks.size() <= chem::kMaxTokens;
}

/// Atoms reachable from `start` without crossing bond `cut`.
inline std::vector<std::size_t> side_of(const MolecularGraph& g, const chem::Adjacency& adj, std::size_t cut,
                                        std::size_t start) {
  std::vector<bool> seen(g.atoms.size(), false);
  std::vector<std::size_t> out{start};
  seen[start] = true;
  for (std::size_t h = 0; h < out.size(); ++h) {
    for (const auto& nb : adj[out[h]]) {
      if (nb.bond == cut || seen[nb.atom]) continue;
      seen[nb.atom] = true;
      out.push_back(nb.atom);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Single bonds that are not on any cycle.
inline std::vector<std::size_t> acyclic_single_bonds(const MolecularGraph& g, const chem::Adjacency& adj) {
  const auto bridges = chem::find_bridges(g, adj);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.bonds.size(); ++i) {
    if (bridges[i] && g.bonds[i].order == chem::BondOrder::single) out.push_back(i);
  }
  return out;
}

struct Fragment {
  std::vector<std::size_t> atoms;  // sorted parent indices
  std::size_t anchor = 0;          // the atom that lost the cut bond
};

inline Fragment random_fragment(const MolecularGraph& g, const chem::Adjacency& adj, std::size_t cut, Rng& rng) {
  const auto& b = g.bonds[cut];
  const std::size_t anchor = bernoulli(rng, 0.5) ? b.a : b.b;
  return Fragment{side_of(g, adj, cut, anchor), anchor};
}

/// Copies the fragment's atoms and internal bonds into `out`, recording
/// origins. Returns the new index of the anchor.
inline std::size_t copy_fragment(const MolecularGraph& src, const Fragment& f, int parent, MolecularGraph& out,
                                 std::vector<AtomOrigin>& origin) {
  std::vector<std::size_t> remap(src.atoms.size(), SIZE_MAX);
  for (std::size_t a : f.atoms) {
    remap[a] = out.atoms.size();
    chem::Atom atom = src.atoms[a];
    atom.implicit_h = 0;
    out.atoms.push_back(atom);
    origin.push_back({parent, a});
  }
  for (const auto& b : src.bonds) {
    if (remap[b.a] != SIZE_MAX && remap[b.b] != SIZE_MAX) out.bonds.push_back({remap[b.a], remap[b.b], b.order});
  }
  return remap[f.anchor];
}

}  // namespace detail

/// Cuts one acyclic single bond in each parent and joins a fragment of `a`
/// to a fragment of `b` with a single bond at the cut sites.
inline std::optional<TracedChild> crossover_traced(const MolecularGraph& a, const MolecularGraph& b, Seed seed,
                                                   std::size_t max_attempts) {
  const auto adj_a = chem::adjacency(a);
  const auto adj_b = chem::adjacency(b);
  const auto cuts_a = detail::acyclic_single_bonds(a, adj_a);
  const auto cuts_b = detail::acyclic_single_bonds(b, adj_b);
  if (cuts_a.empty() || cuts_b.empty()) return std::nullopt;
  Rng rng = make_rng(seed);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const auto fa = detail::random_fragment(a, adj_a, cuts_a[uniform_index(rng, cuts_a.size())], rng);
    const auto fb = detail::random_fragment(b, adj_b, cuts_b[uniform_index(rng, cuts_b.size())], rng);
    TracedChild child;
    const std::size_t ja = detail::copy_fragment(a, fa, 0, child.graph, child.origin);
    const std::size_t jb = detail::copy_fragment(b, fb, 1, child.graph, child.origin);
    child.graph.bonds.push_back({ja, jb, chem::BondOrder::single});
    if (chem::sanitize(child.graph)) continue;
    if (!detail::within_token_limit(child.graph)) continue;
    return child;
  }
  return std::nullopt;
}

inline std::optional<MolecularGraph> crossover(const MolecularGraph& a, const MolecularGraph& b, Seed seed,
                                               std::size_t max_attempts) {
  auto c = crossover_traced(a, b, seed, max_attempts);
  if (!c) return std::nullopt;
  return std::move(c->graph);
}

enum class MutationKind : std::uint8_t { substitute, append, remove, bond_order };

namespace detail {

inline constexpr chem::Element kAppendElements[] = {chem::Element::C, chem::Element::C, chem::Element::N,
                                                    chem::Element::O, chem::Element::F, chem::Element::S,
                                                    chem::Element::Cl, chem::Element::Br};

inline MolecularGraph without_hydrogens(MolecularGraph g) {
  for (auto& atom : g.atoms) atom.implicit_h = 0;
  return g;
}

inline std::optional<MolecularGraph> apply_mutation(const MolecularGraph& g, MutationKind kind, Rng& rng) {
  MolecularGraph m = without_hydrogens(g);
  switch (kind) {
    case MutationKind::substitute: {
      const std::size_t i = uniform_index(rng, m.atoms.size());
      auto& atom = m.atoms[i];
      std::vector<chem::Element> options;
      for (auto e : chem::kAllElements) {
        if (e == atom.element) continue;
        if (atom.aromatic && chem::element_info(e).aromatic_symbol.empty()) continue;
        options.push_back(e);
      }
      if (options.empty()) return std::nullopt;
      atom.element = options[uniform_index(rng, options.size())];
      break;
    }
    case MutationKind::append: {
      const std::size_t i = uniform_index(rng, m.atoms.size());
      m.atoms.push_back(chem::Atom{kAppendElements[uniform_index(rng, std::size(kAppendElements))], false, 0});
      m.bonds.push_back({i, m.atoms.size() - 1, chem::BondOrder::single});
      break;
    }
    case MutationKind::remove: {
      if (m.atoms.size() < 2) return std::nullopt;
      std::vector<int> degree(m.atoms.size(), 0);
      for (const auto& b : m.bonds) {
        ++degree[b.a];
        ++degree[b.b];
      }
      std::vector<std::size_t> leaves;
      for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        if (degree[i] == 1) leaves.push_back(i);
      }
      if (leaves.empty()) return std::nullopt;
      const std::size_t x = leaves[uniform_index(rng, leaves.size())];
      MolecularGraph out;
      std::vector<std::size_t> remap(m.atoms.size(), SIZE_MAX);
      for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        if (i == x) continue;
        remap[i] = out.atoms.size();
        out.atoms.push_back(m.atoms[i]);
      }
      for (const auto& b : m.bonds) {
        if (b.a != x && b.b != x) out.bonds.push_back({remap[b.a], remap[b.b], b.order});
      }
      m = std::move(out);
      break;
    }
    case MutationKind::bond_order: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < m.bonds.size(); ++i) {
        if (m.bonds[i].order != chem::BondOrder::aromatic) candidates.push_back(i);
      }
      if (candidates.empty()) return std::nullopt;
      auto& bond = m.bonds[candidates[uniform_index(rng, candidates.size())]];
      const int current = static_cast<int>(bond.order);
      int next = 1 + static_cast<int>(uniform_index(rng, 2));
      if (next >= current) ++next;
      bond.order = static_cast<chem::BondOrder>(next);
      break;
    }
  }
  if (chem::sanitize(m)) return std::nullopt;
  if (!within_token_limit(m)) return std::nullopt;
  return m;
}

}  // namespace detail

/// One mutation of a specific kind; nothing when it cannot produce a valid
/// molecule within `max_attempts` random placements.
inline std::optional<MolecularGraph> mutate_with(const MolecularGraph& g, MutationKind kind, Seed seed,
                                                 std::size_t max_attempts) {
  Rng rng = make_rng(seed);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    if (auto m = detail::apply_mutation(g, kind, rng)) return m;
  }
  return std::nullopt;
}

/// Applies one mutation whose kind is drawn uniformly per attempt.
inline std::optional<MolecularGraph> mutate(const MolecularGraph& g, Seed seed, std::size_t max_attempts) {
  Rng rng = make_rng(seed);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const auto kind = static_cast<MutationKind>(uniform_index(rng, 4));
    if (auto m = detail::apply_mutation(g, kind, rng)) return m;
  }
  return std::nullopt;
}

/// Pairs parents (0,1), (2,3), ... and yields at most one child per pair:
/// crossover with probability crossover_rate (otherwise, or on failure, a
/// clone of one parent), then mutation with probability mutation_rate.
inline std::vector<MolecularGraph> breed(const std::vector<MolecularGraph>& parents, const GaConfig& cfg, Seed seed) {
  if (parents.size() < 2) throw std::invalid_argument("breed: need at least two parents");
  std::vector<MolecularGraph> children;
  for (std::size_t p = 0; p + 1 < parents.size(); p += 2) {
    const Seed pair_seed = derive_seed(seed, {p / 2});
    Rng rng = make_rng(pair_seed);
    const auto& a = parents[p];
    const auto& b = parents[p + 1];
    std::optional<MolecularGraph> child;
    if (bernoulli(rng, cfg.crossover_rate)) child = crossover(a, b, derive_seed(pair_seed, {1}), cfg.max_attempts);
    if (!child) child = bernoulli(rng, 0.5) ? a : b;
    if (bernoulli(rng, cfg.mutation_rate)) {
      if (auto m = mutate(*child, derive_seed(pair_seed, {2}), cfg.max_attempts)) child = std::move(m);
    }
    if (detail::within_token_limit(*child)) children.push_back(std::move(*child));
  }
  return children;
}

struct ParentSelection {
  std::vector<MolecularGraph> graphs;
  std::vector<std::string> prior_smiles;  // the freshly sampled half, for scoring and budget
  std::size_t prior_draws = 0;
};

/// Half the parents uniformly from the queue (with replacement), half sampled
/// from the prior until valid. With an empty queue every parent comes from
/// the prior.
inline ParentSelection select_parents(const PriorityQueue& queue, const policy::SequencePolicy& prior,
                                      std::size_t population, Seed seed, std::size_t max_draws_per_parent = 200) {
  if (population < 2 || population % 2 != 0) throw std::invalid_argument("select_parents: population must be even");
  ParentSelection out;
  Rng rng = make_rng(derive_seed(seed, {0}));
  const auto entries = queue.entries();
  const std::size_t from_queue = entries.empty() ? 0 : population / 2;
  for (std::size_t i = 0; i < from_queue; ++i) {
    out.graphs.push_back(chem::parse_smiles(entries[uniform_index(rng, entries.size())]->canonical));
  }
  const std::size_t from_prior = population - from_queue;
  std::uint64_t draw = 0;
  const std::size_t limit = max_draws_per_parent * from_prior;
  while (out.prior_smiles.size() < from_prior) {
    if (out.prior_draws >= limit) break;
    const auto c = prior.sample_completion({}, derive_seed(seed, {1, draw++}), chem::kMaxTokens + 1);
    ++out.prior_draws;
    if (c.truncated) continue;
    auto raw = prior.decode(c.tokens);
    auto g = chem::try_parse_smiles(raw);
    if (!g) continue;
    out.graphs.push_back(std::move(*g));
    out.prior_smiles.push_back(std::move(raw));
  }
  if (out.graphs.size() < 2) throw std::runtime_error("select_parents: prior produced too few valid molecules");
  if (out.graphs.size() % 2 != 0) out.graphs.pop_back();
  return out;
}

}  // namespace fastergts::ga
