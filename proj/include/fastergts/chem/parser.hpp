#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fastergts/chem/graph.hpp"
#include "fastergts/chem/token.hpp"

namespace fastergts::chem {

namespace detail {

inline BondOrder bond_from_text(std::string_view text) {
  if (text == "=") return BondOrder::double_;
  if (text == "#") return BondOrder::triple;
  return BondOrder::single;
}

inline BondOrder default_bond(const Atom& x, const Atom& y) {
  return x.aromatic && y.aromatic ? BondOrder::aromatic : BondOrder::single;
}

}  // namespace detail

/// Non-throwing parse of a token stream into `g`.
///
/// Grammar (OpenSMILES organic subset):
///   chain  := branched ( bond? branched )*
///   branched := atom ( bond? ring-digit )* ( '(' bond? chain ')' )*
/// Ring labels pair first-open/first-close and may be reused after closing.
inline std::optional<ValidationError> try_parse(std::span<const Token> tokens, MolecularGraph& g) {
  g = MolecularGraph{};
  if (tokens.empty()) return ValidationError{ErrorCode::lex, 0};
  if (tokens.size() > kMaxTokens) return ValidationError{ErrorCode::grammar, kMaxTokens};

  struct RingOpen {
    std::size_t atom;
    std::optional<BondOrder> bond;
  };
  struct BranchOpen {
    std::size_t atom;
  };
  std::vector<std::size_t> atom_pos;
  std::vector<BranchOpen> branches;
  std::map<int, RingOpen> rings;
  std::optional<std::size_t> prev;
  std::optional<BondOrder> pending;
  std::optional<TokenKind> last;
  bool ring_ok = false;

  auto grammar = [](std::size_t pos) { return ValidationError{ErrorCode::grammar, pos}; };

  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const Token& t = tokens[pos];
    switch (t.kind) {
      case TokenKind::atom: {
        const auto parsed = element_from_symbol(t.text);
        if (!parsed) return ValidationError{ErrorCode::lex, pos};
        const std::size_t idx = g.atoms.size();
        g.atoms.push_back(Atom{parsed->first, parsed->second, 0});
        atom_pos.push_back(pos);
        if (prev) {
          const BondOrder order = pending.value_or(detail::default_bond(g.atoms[*prev], g.atoms[idx]));
          g.bonds.push_back({*prev, idx, order});
        }
        prev = idx;
        pending.reset();
        ring_ok = true;
        break;
      }
      case TokenKind::bond:
        if (!last || *last == TokenKind::bond) return grammar(pos);
        pending = detail::bond_from_text(t.text);
        break;
      case TokenKind::branch_open:
        if (!last || (*last != TokenKind::atom && *last != TokenKind::ring_digit &&
                      *last != TokenKind::branch_close)) {
          return grammar(pos);
        }
        branches.push_back({*prev});
        ring_ok = false;
        break;
      case TokenKind::branch_close:
        if (branches.empty() || !last ||
            (*last != TokenKind::atom && *last != TokenKind::ring_digit &&
             *last != TokenKind::branch_close)) {
          return grammar(pos);
        }
        prev = branches.back().atom;
        branches.pop_back();
        ring_ok = false;
        break;
      case TokenKind::ring_digit: {
        if (!ring_ok || !prev) return grammar(pos);
        const int label = ring_label(t);
        auto it = rings.find(label);
        if (it == rings.end()) {
          rings.emplace(label, RingOpen{*prev, pending});
        } else {
          const RingOpen open = it->second;
          rings.erase(it);
          if (open.atom == *prev) return grammar(pos);
          if (pending && open.bond && *pending != *open.bond) return grammar(pos);
          if (find_bond(g, open.atom, *prev)) return grammar(pos);
          const BondOrder order =
              pending ? *pending
                      : open.bond.value_or(detail::default_bond(g.atoms[open.atom], g.atoms[*prev]));
          g.bonds.push_back({open.atom, *prev, order});
        }
        pending.reset();
        break;
      }
    }
    last = t.kind;
  }

  const std::size_t end = tokens.size() - 1;
  if (pending || !branches.empty()) return grammar(end);
  if (!rings.empty()) return ValidationError{ErrorCode::ring_unclosed, end};
  if (auto err = sanitize(g)) {
    const std::size_t pos = err->atom < atom_pos.size() ? atom_pos[err->atom] : end;
    return ValidationError{err->code, pos};
  }
  return std::nullopt;
}

/// Parses a token stream; throws SmilesError on invalid input.
inline MolecularGraph parse(std::span<const Token> tokens) {
  MolecularGraph g;
  if (auto err = try_parse(tokens, g)) throw SmilesError(*err);
  return g;
}

inline MolecularGraph parse_smiles(std::string_view s) { return parse(tokenize(s)); }

/// Tokenizes and parses; on failure `report` carries the error and the
/// returned optional is empty.
inline std::optional<MolecularGraph> try_parse_smiles(std::string_view s, ValidationReport* report = nullptr) {
  std::vector<Token> tokens;
  std::optional<ValidationError> err = try_tokenize(s, tokens);
  MolecularGraph g;
  if (!err) err = try_parse(tokens, g);
  if (report) *report = err ? ValidationReport::fail(*err) : ValidationReport::ok();
  if (err) return std::nullopt;
  return g;
}

inline ValidationReport is_valid(std::string_view s) noexcept {
  try {
    ValidationReport report;
    (void)try_parse_smiles(s, &report);
    return report;
  } catch (...) {
    // Only allocation failure can reach here.
    return ValidationReport::fail({ErrorCode::lex, 0});
  }
}

}  // namespace fastergts::chem
