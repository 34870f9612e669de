#pragma once

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fastergts::chem {

/// Longest accepted token stream. Longer inputs are a grammar error.
inline constexpr std::size_t kMaxTokens = 100;

enum class TokenKind : std::uint8_t { atom, bond, branch_open, branch_close, ring_digit };

struct Token {
  TokenKind kind;
  std::string text;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class ErrorCode : std::uint8_t {
  lex,
  grammar,
  ring_unclosed,
  valence,
  aromatic_acyclic,
  unsupported_feature,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::lex: return "lex";
    case ErrorCode::grammar: return "grammar";
    case ErrorCode::ring_unclosed: return "ring-unclosed";
    case ErrorCode::valence: return "valence";
    case ErrorCode::aromatic_acyclic: return "aromatic-acyclic";
    case ErrorCode::unsupported_feature: return "unsupported-feature";
  }
  return "unknown";
}

/// Position is a token index. For lexing failures it is the index the
/// offending token would have had; for end-of-input failures it is the
/// index of the last token.
struct ValidationError {
  ErrorCode code;
  std::size_t position;

  friend bool operator==(const ValidationError&, const ValidationError&) = default;
};

struct ValidationReport {
  bool valid = false;
  std::optional<ValidationError> error;

  static ValidationReport ok() { return {true, std::nullopt}; }
  static ValidationReport fail(ValidationError e) { return {false, e}; }
};

class SmilesError : public std::runtime_error {
 public:
  explicit SmilesError(ValidationError e)
      : std::runtime_error(std::string(to_string(e.code)) + " @" + std::to_string(e.position)),
        error_(e) {}

  ErrorCode code() const noexcept { return error_.code; }
  std::size_t position() const noexcept { return error_.position; }
  const ValidationError& error() const noexcept { return error_; }

 private:
  ValidationError error_;
};

namespace detail {

inline bool is_unsupported_char(char c) {
  switch (c) {
    case '[': case ']': case '@': case '/': case '\\': case '+':
    case '.': case ':': case '$':
      return true;
    default:
      return false;
  }
}

}  // namespace detail

/// Non-throwing tokenizer; appends to `out` and reports the first failure.
inline std::optional<ValidationError> try_tokenize(std::string_view s, std::vector<Token>& out) {
  out.clear();
  if (s.empty()) return ValidationError{ErrorCode::lex, 0};
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const char next = i + 1 < s.size() ? s[i + 1] : '\0';
    switch (c) {
      case 'C':
        if (next == 'l') {
          out.push_back({TokenKind::atom, "Cl"});
          i += 2;
        } else {
          out.push_back({TokenKind::atom, "C"});
          ++i;
        }
        continue;
      case 'B':
        if (next == 'r') {
          out.push_back({TokenKind::atom, "Br"});
          i += 2;
        } else {
          out.push_back({TokenKind::atom, "B"});
          ++i;
        }
        continue;
      case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
      case 'c': case 'n': case 'o': case 's':
        out.push_back({TokenKind::atom, std::string(1, c)});
        ++i;
        continue;
      case '-': case '=': case '#':
        out.push_back({TokenKind::bond, std::string(1, c)});
        ++i;
        continue;
      case '(':
        out.push_back({TokenKind::branch_open, "("});
        ++i;
        continue;
      case ')':
        out.push_back({TokenKind::branch_close, ")"});
        ++i;
        continue;
      case '%':
        if (i + 2 < s.size() && std::isdigit(static_cast<unsigned char>(next)) &&
            std::isdigit(static_cast<unsigned char>(s[i + 2]))) {
          out.push_back({TokenKind::ring_digit, std::string(s.substr(i, 3))});
          i += 3;
          continue;
        }
        return ValidationError{ErrorCode::lex, out.size()};
      default:
        break;
    }
    if (c >= '1' && c <= '9') {
      out.push_back({TokenKind::ring_digit, std::string(1, c)});
      ++i;
      continue;
    }
    if (detail::is_unsupported_char(c)) return ValidationError{ErrorCode::unsupported_feature, out.size()};
    return ValidationError{ErrorCode::lex, out.size()};
  }
  return std::nullopt;
}

/// Splits a SMILES string into tokens. Throws SmilesError on characters
/// outside the supported subset.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  if (auto err = try_tokenize(s, tokens)) throw SmilesError(*err);
  return tokens;
}

/// Numeric ring label of a ring-digit token ("7" -> 7, "%12" -> 12).
inline int ring_label(const Token& t) {
  if (t.text.size() == 1) return t.text[0] - '0';
  return (t.text[1] - '0') * 10 + (t.text[2] - '0');
}

inline std::string join_tokens(const std::vector<Token>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += t.text;
  return s;
}

}  // namespace fastergts::chem
