#pragma once

#include <random>
#include <set>
#include <string>

#include "fastergts/chem.hpp"
#include "support/check_report.hpp"
#include "support/molecules.hpp"
#include "support/smiles_oracle.hpp"

namespace testsupport {

/// is_valid against the reduced brute-force oracle on every string up to
/// `max_len` characters over `alphabet`.
inline CheckReport parser_agreement(std::string_view alphabet, std::size_t max_len) {
  CheckReport rep;
  auto strings = oracle::enumerate_strings(alphabet, max_len);
  strings.insert(strings.begin(), "");
  for (const auto& s : strings) {
    ++rep.cases;
    const bool expected = oracle::reduced_smiles_valid(s);
    if (fastergts::chem::is_valid(s).valid != expected) {
      rep.fail("'" + s + "': parser says " + (expected ? "invalid" : "valid"));
    }
  }
  return rep;
}

/// Random molecules under random atom orders must map to one canonical
/// string, and that string must parse back to an isomorphic graph.
inline CheckReport canonical_invariance(std::size_t molecules, std::size_t permutations, std::uint64_t seed,
                                        std::size_t max_atoms = 24) {
  using namespace fastergts::chem;
  CheckReport rep;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < molecules; ++i) {
    const auto g = random_molecule(rng, max_atoms);
    std::set<std::string> forms;
    for (std::size_t k = 0; k < permutations; ++k) {
      forms.insert(canonical_form(permute_atoms(g, random_permutation(g.atom_count(), rng))));
    }
    ++rep.cases;
    if (forms.size() != 1) {
      rep.fail(std::to_string(forms.size()) + " canonical forms for " + write_smiles(g));
      continue;
    }
    if (!isomorphic(parse_smiles(*forms.begin()), g)) rep.fail("round trip not isomorphic: " + *forms.begin());
  }
  return rep;
}

}  // namespace testsupport
