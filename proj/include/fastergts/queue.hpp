#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fastergts/reward.hpp"
#include "fastergts/rng.hpp"

namespace fastergts {

enum class Source : std::uint8_t { mcts, ga, prior };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::mcts: return "mcts";
    case Source::ga: return "ga";
    case Source::prior: return "prior";
  }
  return "?";
}

inline std::optional<Source> source_from_string(std::string_view s) {
  if (s == "mcts") return Source::mcts;
  if (s == "ga") return Source::ga;
  if (s == "prior") return Source::prior;
  return std::nullopt;
}

struct QueueEntry {
  std::string canonical;
  std::string raw;
  double reward = 1.0;
  double y_t = 0.0;
  double y_z = 0.0;
  Source source = Source::mcts;
  std::size_t iteration = 0;
};

/// Bounded, deduplicated store of the best molecules seen. On overflow the
/// lowest reward goes first; among equal rewards the most recent, then the
/// lexicographically largest canonical string.
class PriorityQueue {
 public:
  explicit PriorityQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("queue capacity must be > 0");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return by_key_.size(); }
  bool empty() const { return by_key_.empty(); }
  bool full() const { return size() >= capacity_; }

  const QueueEntry* find(const std::string& canonical) const {
    auto it = by_key_.find(canonical);
    return it == by_key_.end() ? nullptr : &it->second;
  }

  std::optional<double> min_reward() const {
    if (order_.empty()) return std::nullopt;
    return std::get<0>(*order_.begin());
  }

  /// True when the molecule was stored (new entry or strictly better score).
  bool admit(const reward::ScoredMolecule& m, Source source, std::size_t iteration) {
    if (m.canonical.empty()) throw std::invalid_argument("admit: molecule has no canonical form");
    QueueEntry e{m.canonical, m.raw, m.reward, m.y_t, m.y_z, source, iteration};
    if (auto it = by_key_.find(m.canonical); it != by_key_.end()) {
      if (!(m.reward > it->second.reward)) return false;
      order_.erase(order_key(it->second));
      it->second = std::move(e);
      order_.insert(order_key(it->second));
      return true;
    }
    if (full()) {
      const auto victim = *order_.begin();
      if (!(m.reward > std::get<0>(victim))) return false;
      order_.erase(order_.begin());
      by_key_.erase(std::get<2>(victim));
    }
    order_.insert(order_key(e));
    by_key_.emplace(m.canonical, std::move(e));
    return true;
  }

  /// Highest rewards first; ties by earlier iteration, then canonical.
  std::vector<QueueEntry> top_k(std::size_t k) const {
    std::vector<const QueueEntry*> all;
    all.reserve(size());
    for (const auto& [key, e] : by_key_) all.push_back(&e);
    std::sort(all.begin(), all.end(), [](const QueueEntry* a, const QueueEntry* b) {
      if (a->reward != b->reward) return a->reward > b->reward;
      if (a->iteration != b->iteration) return a->iteration < b->iteration;
      return a->canonical < b->canonical;
    });
    if (all.size() > k) all.resize(k);
    std::vector<QueueEntry> out;
    out.reserve(all.size());
    for (const auto* e : all) out.push_back(*e);
    return out;
  }

  /// Entries in canonical-string order.
  std::vector<const QueueEntry*> entries() const {
    std::vector<const QueueEntry*> out;
    out.reserve(size());
    for (const auto& [key, e] : by_key_) out.push_back(&e);
    return out;
  }

  /// `n` entries drawn uniformly without replacement (all of them if n >= size).
  std::vector<const QueueEntry*> sample_without_replacement(Rng& rng, std::size_t n) const {
    auto all = entries();
    n = std::min(n, all.size());
    for (std::size_t i = 0; i < n; ++i) std::swap(all[i], all[i + uniform_index(rng, all.size() - i)]);
    all.resize(n);
    return all;
  }

 private:
  // Ordered so that begin() is the eviction victim.
  using Key = std::tuple<double, std::size_t, std::string>;
  struct KeyLess {
    bool operator()(const Key& a, const Key& b) const {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
      return std::get<2>(a) > std::get<2>(b);
    }
  };
  static Key order_key(const QueueEntry& e) { return {e.reward, e.iteration, e.canonical}; }

  std::size_t capacity_;
  std::map<std::string, QueueEntry> by_key_;
  std::set<Key, KeyLess> order_;
};

}  // namespace fastergts
