#pragma once

// Small in-memory fixtures shared by the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "fastergts/chem.hpp"
#include "fastergts/policy.hpp"
#include "fastergts/reward.hpp"
#include "support/molecules.hpp"

namespace testsupport {

inline std::vector<std::vector<std::string>> random_corpus(std::uint64_t seed, std::size_t n, std::size_t max_atoms) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> corpus;
  for (std::size_t i = 0; i < n; ++i) {
    corpus.push_back(fastergts::policy::smiles_token_texts(fastergts::chem::write_smiles(random_molecule(rng, max_atoms))));
  }
  return corpus;
}

inline fastergts::policy::SequencePolicy random_prior(std::uint64_t seed, std::size_t n = 300, std::size_t order = 5,
                                                      double smoothing = 0.02) {
  return fastergts::policy::SequencePolicy::fit(random_corpus(seed, n, 16), order, smoothing,
                                                fastergts::policy::base_vocabulary());
}

/// Deterministic pseudo-random oracle keyed on the written molecule and the
/// profile id. Cheap, and unrelated to the surrogate's structure.
class HashOracle final : public fastergts::reward::ValueOracle {
 public:
  double score(const fastergts::chem::MolecularGraph& g, const fastergts::reward::SampleProfile& p) const override {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : fastergts::chem::write_smiles(g) + "|" + p.id) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    h = fastergts::splitmix64(h);
    return -6.0 + 12.0 * static_cast<double>(h >> 11) * 0x1.0p-53;
  }
};

inline fastergts::reward::Panel random_panel(std::uint64_t seed, std::size_t n, fastergts::reward::PanelRole role,
                                             const std::string& prefix) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  fastergts::reward::Panel panel;
  panel.role = role;
  for (std::size_t i = 0; i < n; ++i) {
    fastergts::reward::SampleProfile p{prefix + std::to_string(i), {}};
    for (auto& x : p.features) x = nd(rng);
    panel.profiles.push_back(p);
  }
  return panel;
}

}  // namespace testsupport
