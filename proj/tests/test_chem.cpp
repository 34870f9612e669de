#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>

#include "fastergts/chem.hpp"
#include "support/chem_checks.hpp"
#include "support/molecules.hpp"
#include "support/smiles_oracle.hpp"

namespace fastergts::chem {
namespace {

std::vector<Token> toks(std::initializer_list<std::pair<TokenKind, const char*>> list) {
  std::vector<Token> out;
  for (const auto& [k, t] : list) out.push_back({k, t});
  return out;
}

TEST(Tokenize, GreedyTwoCharacterElements) {
  EXPECT_EQ(tokenize("CCl"), toks({{TokenKind::atom, "C"}, {TokenKind::atom, "Cl"}}));
  EXPECT_EQ(tokenize("BrB"), toks({{TokenKind::atom, "Br"}, {TokenKind::atom, "B"}}));
}

TEST(Tokenize, BranchAndBond) {
  EXPECT_EQ(tokenize("C(=O)O"),
            toks({{TokenKind::atom, "C"}, {TokenKind::branch_open, "("}, {TokenKind::bond, "="},
                  {TokenKind::atom, "O"}, {TokenKind::branch_close, ")"}, {TokenKind::atom, "O"}}));
}

TEST(Tokenize, PercentRingLabels) {
  const auto t = tokenize("C%12CC%12");
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[1], (Token{TokenKind::ring_digit, "%12"}));
  EXPECT_EQ(ring_label(t[1]), 12);
}

TEST(Tokenize, StereoMarkIsUnsupported) {
  try {
    tokenize("C@H");
    FAIL() << "expected SmilesError";
  } catch (const SmilesError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_feature);
    EXPECT_EQ(e.position(), 1u);
  }
}

TEST(Tokenize, BracketAtomAndChargeAreUnsupported) {
  EXPECT_EQ(is_valid("C[NH3+]").error->code, ErrorCode::unsupported_feature);
  EXPECT_EQ(is_valid("CC.O").error->code, ErrorCode::unsupported_feature);
  EXPECT_EQ(is_valid("CXC").error->code, ErrorCode::lex);
  EXPECT_EQ(is_valid("C0C").error->code, ErrorCode::lex);
}

TEST(Tokenize, ConcatenationRoundTrip) {
  for (const char* s : {"CCl", "c1ccccc1Br", "C(=O)N#C", "C%10CC%10", "OS(=O)(=O)C"}) {
    EXPECT_EQ(join_tokens(tokenize(s)), s);
  }
}

TEST(Parse, Cyclopropane) {
  const auto g = parse_smiles("C1CC1");
  EXPECT_EQ(g.atom_count(), 3u);
  EXPECT_EQ(g.bond_count(), 3u);
  for (const auto& b : g.bonds) EXPECT_EQ(b.order, BondOrder::single);
  for (bool r : g.in_ring) EXPECT_TRUE(r);
  EXPECT_EQ(g.ring_count(), 1u);
}

TEST(Parse, PentavalentCarbonIsValenceError) {
  const auto r = is_valid("C(C)(C)(C)(C)C");
  ASSERT_FALSE(r.valid);
  EXPECT_EQ(r.error->code, ErrorCode::valence);
  EXPECT_EQ(r.error->position, 0u);
}

TEST(Parse, UnclosedRing) {
  const auto r = is_valid("C1CC");
  ASSERT_FALSE(r.valid);
  EXPECT_EQ(r.error->code, ErrorCode::ring_unclosed);
  EXPECT_EQ(r.error->position, 3u);
}

TEST(Parse, GrammarErrors) {
  for (const char* s : {"=C", "C=", "C(C", "C)C", "C()", "C((C))", "C=(C)", "(C)", "1CC1", "C==C",
                        "C(C)1CC1", "C11", "C1C1"}) {
    const auto r = is_valid(s);
    ASSERT_FALSE(r.valid) << s;
    EXPECT_EQ(r.error->code, ErrorCode::grammar) << s;
    EXPECT_LT(r.error->position, tokenize(s).size()) << s;
  }
}

TEST(Parse, RingBondOrderConflict) {
  EXPECT_FALSE(is_valid("C=1CC#1").valid);
  EXPECT_TRUE(is_valid("C=1CCC=1").valid);
  EXPECT_TRUE(is_valid("C=1CCC1").valid);
}

TEST(Parse, RingLabelReuse) {
  const auto g = parse_smiles("C1CC1C1CC1");
  EXPECT_EQ(g.ring_count(), 2u);
}

TEST(Parse, AromaticRules) {
  const auto benzene = parse_smiles("c1ccccc1");
  for (const auto& a : benzene.atoms) EXPECT_EQ(a.implicit_h, 1);
  EXPECT_TRUE(is_valid("Cc1ccncc1").valid);
  EXPECT_EQ(is_valid("cc").error->code, ErrorCode::aromatic_acyclic);
  EXPECT_EQ(is_valid("Cc").error->code, ErrorCode::aromatic_acyclic);
  // Biphenyl link is a bridge: single, so both junction atoms stay at valence 4.
  const auto biphenyl = parse_smiles("c1ccccc1c1ccccc1");
  EXPECT_EQ(biphenyl.ring_count(), 2u);
  EXPECT_EQ(biphenyl.bonds[6].order, BondOrder::single);
  // Fused aromatic atoms carry 3 x 1.5 = 4.5 -> 5 > 4.
  EXPECT_EQ(is_valid("c1ccc2ccccc2c1").error->code, ErrorCode::valence);
}

TEST(Parse, SulfurAndPhosphorusValences) {
  EXPECT_TRUE(is_valid("CS(=O)(=O)C").valid);
  EXPECT_TRUE(is_valid("CP(=O)(O)O").valid);
  EXPECT_TRUE(is_valid("CSC").valid);
  EXPECT_FALSE(is_valid("FC(F)(F)(F)F").valid);
  const auto g = parse_smiles("CS(=O)C");
  EXPECT_EQ(g.atoms[1].implicit_h, 2);  // valence 4 rounds up to the allowed 6
}

TEST(Parse, TokenLimit) {
  std::string ok(kMaxTokens, 'C');
  EXPECT_TRUE(is_valid(ok).valid);
  const auto r = is_valid(ok + "C");
  ASSERT_FALSE(r.valid);
  EXPECT_EQ(r.error->code, ErrorCode::grammar);
  EXPECT_EQ(r.error->position, kMaxTokens);
}

TEST(IsValid, BasicCases) {
  EXPECT_TRUE(is_valid("CCO").valid);
  const auto empty = is_valid("");
  ASSERT_FALSE(empty.valid);
  EXPECT_EQ(empty.error->code, ErrorCode::lex);
  EXPECT_EQ(empty.error->position, 0u);
}

TEST(IsValid, AgreesWithReducedOracleOnShortStrings) {
  const auto rep = testsupport::parser_agreement("CON()1=", 4);
  EXPECT_TRUE(rep.ok()) << rep.violations << " disagreements, first: " << rep.detail;
  EXPECT_EQ(rep.cases, 2801u);
}

TEST(Canonical, SingleAtom) { EXPECT_EQ(canonical_form(parse_smiles("C")), "C"); }

TEST(Canonical, EthanolOrderings) {
  const auto a = parse_smiles("OCC");
  const auto b = parse_smiles("CCO");
  ASSERT_TRUE(testsupport::isomorphic(a, b));
  EXPECT_EQ(canonical_form(a), canonical_form(b));
}

TEST(Canonical, DistinguishesNonIsomorphic) {
  const auto a = parse_smiles("CC(C)O");
  const auto b = parse_smiles("CCCO");
  ASSERT_FALSE(testsupport::isomorphic(a, b));
  EXPECT_NE(canonical_form(a), canonical_form(b));
}

TEST(Canonical, PermutationInvariance12Atoms) {
  const auto g = parse_smiles("CC(C)c1ccc(cc1)C(=O)O");
  ASSERT_EQ(g.atom_count(), 12u);
  std::mt19937_64 rng(7);
  std::set<std::string> forms;
  for (int i = 0; i < 100; ++i) {
    const auto perm = testsupport::random_permutation(g.atom_count(), rng);
    forms.insert(canonical_form(permute_atoms(g, perm)));
  }
  EXPECT_EQ(forms.size(), 1u);
}

TEST(Canonical, SymmetricStructures) {
  for (const char* s : {"C1CCCCC1", "CC(C)(C)C(C)(C)C", "FC(F)(F)C(F)(F)F", "c1ccccc1c1ccccc1",
                        "C12CC1C2", "C1CC2CCC1CC2"}) {
    const auto g = parse_smiles(s);
    std::mt19937_64 rng(11);
    const std::string ref = canonical_form(g);
    for (int i = 0; i < 20; ++i) {
      EXPECT_EQ(canonical_form(permute_atoms(g, testsupport::random_permutation(g.atom_count(), rng))), ref) << s;
    }
    EXPECT_TRUE(testsupport::isomorphic(parse_smiles(ref), g)) << s;
  }
}

TEST(Canonical, FixedPointUnderReparse) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto g = testsupport::random_molecule(rng, 24);
    const std::string c = canonical_form(g);
    EXPECT_EQ(canonical_form(parse_smiles(c)), c);
  }
}

TEST(Canonical, RandomMoleculesUnderPermutation) {
  const auto rep = testsupport::canonical_invariance(200, 20, 5);
  EXPECT_TRUE(rep.ok()) << rep.violations << " violations, first: " << rep.detail;
}

TEST(WriteSmiles, SingleCarbon) {
  MolecularGraph g;
  g.atoms.push_back({Element::C, false, 0});
  ASSERT_FALSE(sanitize(g));
  EXPECT_EQ(write_smiles(g), "C");
}

TEST(WriteSmiles, EthanolRoundTrip) {
  const auto g = parse_smiles("OCC");
  EXPECT_EQ(canonical_form(parse_smiles(write_smiles(g))), canonical_form(parse_smiles("CCO")));
}

TEST(WriteSmiles, RandomMoleculesRoundTrip) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 500; ++i) {
    const auto g = testsupport::random_molecule(rng, 30);
    const std::string s = write_smiles(g);
    const auto report = is_valid(s);
    ASSERT_TRUE(report.valid) << s;
    ASSERT_TRUE(testsupport::isomorphic(parse_smiles(s), g)) << s;
  }
}

TEST(WriteSmiles, AromaticSingleBondIsExplicit) {
  const auto g = parse_smiles("c1ccccc1-c1ccccc1");
  const std::string s = write_smiles(g);
  EXPECT_NE(s.find('-'), std::string::npos);
  EXPECT_TRUE(testsupport::isomorphic(parse_smiles(s), g));
}

TEST(Descriptors, Ethanol) {
  const auto d = descriptors(parse_smiles("CCO"));
  const Descriptors expected{2.0 / 3, 0, 1.0 / 3, 0, 0, 0, 0, 3.0 / 50};
  for (std::size_t i = 0; i < kDescriptorLength; ++i) EXPECT_DOUBLE_EQ(d[i], expected[i]) << i;
}

TEST(Descriptors, RingAndAromatic) {
  EXPECT_DOUBLE_EQ(descriptors(parse_smiles("C1CC1"))[5], 1.0 / 3);
  EXPECT_DOUBLE_EQ(descriptors(parse_smiles("c1ccccc1"))[4], 1.0);
  // Isobutane: one atom of degree 3.
  EXPECT_DOUBLE_EQ(descriptors(parse_smiles("CC(C)C"))[6], 1.0 / 4);
  EXPECT_DOUBLE_EQ(descriptors(parse_smiles("CCCl"))[3], 1.0 / 3);
}

TEST(Descriptors, InvariantUnderRewriting) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto g = testsupport::random_molecule(rng, 20);
    EXPECT_EQ(descriptors(g), descriptors(parse_smiles(canonical_form(g))));
  }
}

TEST(Graph, ParsedGraphsSatisfyValenceCaps) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto g = parse_smiles(write_smiles(testsupport::random_molecule(rng, 25)));
    for (std::size_t a = 0; a < g.atom_count(); ++a) {
      const int used = (bonded_halves(g, a) + 1) / 2 + g.atoms[a].implicit_h;
      const auto& allowed = element_info(g.atoms[a].element).valences;
      EXPECT_TRUE(used == allowed[0] || used == allowed[1]);
    }
  }
}

}  // namespace
}  // namespace fastergts::chem
