#pragma once

#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "fastergts/ga.hpp"
#include "support/check_report.hpp"
#include "support/fixtures.hpp"

namespace testsupport {

/// Checks that a traced crossover child is the union of one fragment from
/// each parent plus exactly one new single bond between them.
inline bool provenance_consistent(const fastergts::chem::MolecularGraph& a, const fastergts::chem::MolecularGraph& b,
                                  const fastergts::ga::TracedChild& c, std::string* why = nullptr) {
  using namespace fastergts::chem;
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (c.origin.size() != c.graph.atoms.size()) return fail("origin size mismatch");
  std::set<std::pair<int, std::size_t>> seen;
  const MolecularGraph* parents[2] = {&a, &b};
  for (std::size_t i = 0; i < c.origin.size(); ++i) {
    const auto& o = c.origin[i];
    if (o.parent != 0 && o.parent != 1) return fail("bad parent tag");
    if (o.atom >= parents[o.parent]->atoms.size()) return fail("origin atom out of range");
    if (!seen.insert({o.parent, o.atom}).second) return fail("atom copied twice");
    const auto& src = parents[o.parent]->atoms[o.atom];
    if (src.element != c.graph.atoms[i].element || src.aromatic != c.graph.atoms[i].aromatic) return fail("atom label changed");
  }
  std::size_t crossing = 0;
  std::size_t per_parent_bonds[2] = {0, 0};
  for (const auto& bond : c.graph.bonds) {
    const auto& oa = c.origin[bond.a];
    const auto& ob = c.origin[bond.b];
    if (oa.parent != ob.parent) {
      ++crossing;
      if (bond.order != BondOrder::single) return fail("crossing bond is not single");
      continue;
    }
    const auto idx = find_bond(*parents[oa.parent], oa.atom, ob.atom);
    if (!idx || parents[oa.parent]->bonds[*idx].order != bond.order) return fail("internal bond not in parent");
    ++per_parent_bonds[oa.parent];
  }
  if (crossing != 1) return fail("expected exactly one crossing bond");
  // Every parent bond between two copied atoms must be present (whole fragment).
  for (int p = 0; p < 2; ++p) {
    std::size_t expected = 0;
    for (const auto& bond : parents[p]->bonds) expected += seen.count({p, bond.a}) && seen.count({p, bond.b});
    if (expected != per_parent_bonds[p]) return fail("fragment lost an internal bond");
    bool any = false;
    for (const auto& s : seen) any |= s.first == p;
    if (!any) return fail("parent contributed no atoms");
  }
  return true;
}

struct GaReport : CheckReport {
  std::size_t crossovers = 0;
};

/// Breeds from random parent pools until `outputs` children have been
/// produced, checking each with the parser, and separately verifies the
/// provenance of `traced` crossover children.
inline GaReport ga_closure(const std::vector<fastergts::chem::MolecularGraph>& pool, std::size_t outputs,
                           std::size_t traced, std::uint64_t seed) {
  using namespace fastergts;
  GaReport rep;
  std::mt19937_64 rng(seed);
  ga::GaConfig cfg;
  cfg.crossover_rate = 0.8;
  cfg.mutation_rate = 0.5;
  std::uint64_t round = 0;
  while (rep.cases < outputs) {
    std::vector<chem::MolecularGraph> parents;
    for (std::size_t i = 0; i < cfg.population; ++i) parents.push_back(pool[rng() % pool.size()]);
    for (const auto& child : ga::breed(parents, cfg, derive_seed(seed, {round++}))) {
      if (rep.cases >= outputs) break;
      ++rep.cases;
      const auto smiles = chem::write_smiles(child);
      const auto report = chem::is_valid(smiles);
      if (!report.valid) rep.fail("invalid child " + smiles);
    }
  }
  for (std::size_t i = 0; i < traced; ++i) {
    const auto& a = pool[rng() % pool.size()];
    const auto& b = pool[rng() % pool.size()];
    const auto c = ga::crossover_traced(a, b, derive_seed(seed, {999, i}), cfg.max_attempts);
    if (!c) continue;
    ++rep.crossovers;
    std::string why;
    if (!provenance_consistent(a, b, *c, &why)) rep.fail("provenance: " + why);
    if (!chem::is_valid(chem::write_smiles(c->graph)).valid) rep.fail("invalid crossover child");
  }
  return rep;
}

}  // namespace testsupport
