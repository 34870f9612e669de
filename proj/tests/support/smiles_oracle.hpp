#pragma once

// Independent validity oracle for the reduced alphabet {C, N, O, (, ), 1, =}.
//
// A recursive-descent recognizer builds the atom/edge lists straight from
// the OpenSMILES productions, then valence is checked by summing bond
// orders. Shares no code with the library parser.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

class ReducedSmiles {
 public:
  explicit ReducedSmiles(std::string_view s) : s_(s) {}

  bool valid() {
    if (s_.empty()) return false;
    if (!chain(-1, 0)) return false;
    if (pos_ != s_.size()) return false;
    if (!open_.empty()) return false;
    std::vector<int> used(atoms_.size(), 0);
    for (const auto& e : edges_) {
      if (e.a == e.b) return false;
      used[e.a] += e.order;
      used[e.b] += e.order;
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      for (std::size_t j = i + 1; j < edges_.size(); ++j) {
        const bool same = (edges_[i].a == edges_[j].a && edges_[i].b == edges_[j].b) ||
                          (edges_[i].a == edges_[j].b && edges_[i].b == edges_[j].a);
        if (same) return false;
      }
    }
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (used[i] > cap(atoms_[i])) return false;
    }
    return true;
  }

 private:
  struct Edge {
    int a;
    int b;
    int order;
  };

  static int cap(char element) {
    switch (element) {
      case 'C': return 4;
      case 'N': return 3;
      case 'O': return 2;
    }
    return 0;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  static bool is_atom(char c) { return c == 'C' || c == 'N' || c == 'O'; }

  // bond? -> order or 0 when absent
  int optional_bond() {
    if (peek() == '=') {
      ++pos_;
      return 2;
    }
    return 0;
  }

  // chain := branched ( bond? branched )*
  bool chain(int prev, int bond) {
    int last = branched(prev, bond);
    if (last < 0) return false;
    while (true) {
      const std::size_t save = pos_;
      const int b = optional_bond();
      if (!is_atom(peek())) {
        pos_ = save;
        return true;
      }
      last = branched(last, b);
      if (last < 0) return false;
    }
  }

  // branched := atom ( bond? digit )* ( '(' bond? chain ')' )*
  int branched(int prev, int bond) {
    if (!is_atom(peek())) return -1;
    const int me = static_cast<int>(atoms_.size());
    atoms_.push_back(peek());
    ++pos_;
    if (prev >= 0) edges_.push_back({prev, me, bond == 0 ? 1 : bond});
    while (true) {
      const std::size_t save = pos_;
      const int b = optional_bond();
      if (peek() != '1') {
        pos_ = save;
        break;
      }
      ++pos_;
      auto it = open_.find('1');
      if (it == open_.end()) {
        open_['1'] = {me, b};
      } else {
        const auto [partner, open_bond] = it->second;
        open_.erase(it);
        if (b != 0 && open_bond != 0 && b != open_bond) return -1;
        const int order = b != 0 ? b : (open_bond != 0 ? open_bond : 1);
        edges_.push_back({partner, me, order});
      }
    }
    while (peek() == '(') {
      ++pos_;
      const int b = optional_bond();
      if (!chain(me, b)) return -1;
      if (peek() != ')') return -1;
      ++pos_;
    }
    return me;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<char> atoms_;
  std::vector<Edge> edges_;
  std::map<char, std::pair<int, int>> open_;
};

inline bool reduced_smiles_valid(std::string_view s) { return ReducedSmiles(s).valid(); }

/// Every string of length 1..max_len over the alphabet.
inline std::vector<std::string> enumerate_strings(std::string_view alphabet, std::size_t max_len) {
  std::vector<std::string> out;
  std::vector<std::string> frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& p : frontier) {
      for (char c : alphabet) next.push_back(p + c);
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace oracle
