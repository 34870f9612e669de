#pragma once

// Count-based conditional next-token model over SMILES tokens.
//
// One class serves both the general prior (fit once on a corpus, then left
// untouched) and the sample-specific policy (a copy of the prior whose counts
// are blended with queue molecules). Maximum likelihood for this family is
// exact counting, so fit() minimises the token cross-entropy in closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastergts/chem/token.hpp"
#include "fastergts/rng.hpp"

namespace fastergts::policy {

using TokenId = std::uint16_t;
using Sequence = std::vector<TokenId>;

inline constexpr std::size_t kDefaultOrder = 6;
inline constexpr double kDefaultSmoothing = 0.05;
inline constexpr std::size_t kMaxOrder = 9;

struct Completion {
  Sequence tokens;         // without the end marker
  bool truncated = false;  // max length reached before the end marker
};

struct TrainReport {
  std::size_t sequences_used = 0;
  double mean_log_likelihood_before = 0.0;
  double mean_log_likelihood_after = 0.0;
};

class SequencePolicy {
 public:
  SequencePolicy() = default;

  /// Exact n-gram counts over begin-padded sequences. Vocabulary is the set
  /// of tokens in the corpus plus `extra_vocabulary`, in first-seen order.
  static SequencePolicy fit(const std::vector<std::vector<std::string>>& corpus, std::size_t order,
                            double smoothing, std::span<const std::string> extra_vocabulary = {}) {
    if (corpus.empty()) throw std::invalid_argument("fit: empty corpus");
    SequencePolicy p(order, smoothing);
    for (const auto& seq : corpus) {
      for (const auto& t : seq) p.intern(t);
    }
    for (const auto& t : extra_vocabulary) p.intern(t);
    if (p.vocab_.size() + 2 > 255) throw std::invalid_argument("fit: vocabulary too large");
    for (const auto& seq : corpus) {
      Sequence ids;
      ids.reserve(seq.size());
      for (const auto& t : seq) ids.push_back(p.index_.at(t));
      p.add_counts(ids, 1.0);
    }
    return p;
  }

  std::size_t order() const { return order_; }
  double smoothing() const { return smoothing_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  /// Distribution index of the end marker.
  TokenId end_id() const { return static_cast<TokenId>(vocab_.size()); }
  std::size_t outcome_count() const { return vocab_.size() + 1; }
  std::size_t context_count() const { return table_.size(); }

  std::optional<TokenId> id_of(std::string_view text) const {
    auto it = index_.find(std::string(text));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& text_of(TokenId id) const { return vocab_.at(id); }

  /// Maps token texts to ids; empty when any token is out of vocabulary.
  std::optional<Sequence> encode(const std::vector<std::string>& texts) const {
    Sequence out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      auto id = id_of(t);
      if (!id) return std::nullopt;
      out.push_back(*id);
    }
    return out;
  }

  std::optional<Sequence> encode(const std::vector<chem::Token>& tokens) const {
    Sequence out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
      auto id = id_of(t.text);
      if (!id) return std::nullopt;
      out.push_back(*id);
    }
    return out;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string s;
    for (TokenId id : ids) s += vocab_.at(id);
    return s;
  }

  void next_distribution(std::span<const TokenId> prefix, std::vector<double>& out) const {
    const std::size_t m = outcome_count();
    out.resize(m);
    const auto it = table_.find(context_key(prefix));
    const double denom_k = smoothing_ * static_cast<double>(m);
    if (it == table_.end()) {
      std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(m));
      return;
    }
    const double denom = it->second.total + denom_k;
    for (std::size_t i = 0; i < m; ++i) out[i] = (it->second.counts[i] + smoothing_) / denom;
  }

  /// Probabilities over vocabulary followed by the end marker.
  std::vector<double> next_distribution(std::span<const TokenId> prefix) const {
    std::vector<double> out;
    next_distribution(prefix, out);
    return out;
  }

  double probability(std::span<const TokenId> prefix, TokenId next) const {
    const auto it = table_.find(context_key(prefix));
    const double m = static_cast<double>(outcome_count());
    if (it == table_.end()) return 1.0 / m;
    return (it->second.counts[next] + smoothing_) / (it->second.total + smoothing_ * m);
  }

  Completion sample_completion(std::span<const TokenId> prefix, Seed seed, std::size_t max_len) const {
    Completion c;
    c.tokens.assign(prefix.begin(), prefix.end());
    Rng rng = make_rng(seed);
    std::vector<double> dist;
    while (c.tokens.size() < max_len) {
      next_distribution(c.tokens, dist);
      const auto next = static_cast<TokenId>(sample_weighted(rng, dist));
      if (next == end_id()) return c;
      c.tokens.push_back(next);
    }
    c.truncated = true;
    return c;
  }

  /// Sum of log p over every predicted token (including the end marker),
  /// and the number of predictions.
  std::pair<double, std::size_t> log_likelihood(std::span<const TokenId> seq) const {
    double ll = 0.0;
    for (std::size_t t = 0; t <= seq.size(); ++t) {
      const TokenId next = t < seq.size() ? seq[t] : end_id();
      ll += std::log(probability(seq.first(t), next));
    }
    return {ll, seq.size() + 1};
  }

  double mean_log_likelihood(const std::vector<Sequence>& batch) const {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& s : batch) {
      const auto [ll, count] = log_likelihood(s);
      total += ll;
      n += count;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
  }

  /// Adds weight x (n-gram counts of batch). For a count model this moves
  /// each context's distribution toward the batch's empirical one, so the
  /// batch likelihood cannot decrease.
  TrainReport fine_tune(const std::vector<Sequence>& batch, double weight) {
    if (batch.empty()) throw std::invalid_argument("fine_tune: empty batch");
    if (!(weight >= 0.0) || !std::isfinite(weight)) throw std::invalid_argument("fine_tune: weight must be >= 0");
    TrainReport report;
    report.sequences_used = batch.size();
    report.mean_log_likelihood_before = mean_log_likelihood(batch);
    if (weight > 0.0) {
      for (const auto& s : batch) add_counts(s, weight);
    }
    report.mean_log_likelihood_after = mean_log_likelihood(batch);
    return report;
  }

  /// Equality of the full count table, bit for bit.
  friend bool operator==(const SequencePolicy& x, const SequencePolicy& y) {
    if (x.order_ != y.order_ || x.smoothing_ != y.smoothing_ || x.vocab_ != y.vocab_) return false;
    if (x.table_.size() != y.table_.size()) return false;
    for (const auto& [key, entry] : x.table_) {
      auto it = y.table_.find(key);
      if (it == y.table_.end() || it->second.counts != entry.counts || it->second.total != entry.total) return false;
    }
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "fastergts-policy";
    j["version"] = 1;
    j["order"] = order_;
    j["smoothing"] = smoothing_;
    j["vocabulary"] = vocab_;
    std::vector<std::uint64_t> keys;
    keys.reserve(table_.size());
    for (const auto& [key, entry] : table_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    nlohmann::json contexts = nlohmann::json::array();
    for (std::uint64_t key : keys) {
      const auto& entry = table_.at(key);
      nlohmann::json counts = nlohmann::json::array();
      for (std::size_t i = 0; i < entry.counts.size(); ++i) {
        if (entry.counts[i] != 0.0) counts.push_back({i, entry.counts[i]});
      }
      contexts.push_back({{"context", unpack_key(key)}, {"counts", counts}});
    }
    j["contexts"] = std::move(contexts);
    return j;
  }

  static SequencePolicy from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "fastergts-policy") throw std::runtime_error("policy: unrecognised format");
    if (j.at("version").get<int>() != 1) throw std::runtime_error("policy: unsupported version");
    SequencePolicy p(j.at("order").get<std::size_t>(), j.at("smoothing").get<double>());
    for (const auto& t : j.at("vocabulary")) p.intern(t.get<std::string>());
    const std::size_t m = p.outcome_count();
    for (const auto& c : j.at("contexts")) {
      const auto ctx = c.at("context").get<std::vector<int>>();
      if (ctx.size() != p.order_ - 1) throw std::runtime_error("policy: context length mismatch");
      std::uint64_t key = 0;
      for (int id : ctx) {
        if (id < 0 || static_cast<std::size_t>(id) > m) throw std::runtime_error("policy: context id out of range");
        key = (key << 8) | static_cast<std::uint64_t>(id + 1);
      }
      Entry& e = p.table_[key];
      e.counts.assign(m, 0.0);
      for (const auto& pair : c.at("counts")) {
        const auto idx = pair.at(0).get<std::size_t>();
        if (idx >= m) throw std::runtime_error("policy: count index out of range");
        e.counts[idx] = pair.at(1).get<double>();
        if (e.counts[idx] < 0.0) throw std::runtime_error("policy: negative count");
      }
      e.recompute_total();
    }
    return p;
  }

 private:
  struct Entry {
    std::vector<double> counts;
    double total = 0.0;

    void recompute_total() {
      total = 0.0;
      for (double c : counts) total += c;
    }
  };

  SequencePolicy(std::size_t order, double smoothing) : order_(order), smoothing_(smoothing) {
    if (order < 1 || order > kMaxOrder) throw std::invalid_argument("policy order must be in [1, 9]");
    if (!(smoothing > 0.0)) throw std::invalid_argument("policy smoothing must be > 0");
  }

  TokenId begin_id() const { return static_cast<TokenId>(vocab_.size() + 1); }

  void intern(const std::string& t) {
    if (index_.count(t)) return;
    index_.emplace(t, static_cast<TokenId>(vocab_.size()));
    vocab_.push_back(t);
  }

  // Last (order - 1) ids of the begin-padded prefix, 8 bits each (id + 1).
  std::uint64_t context_key(std::span<const TokenId> prefix) const {
    std::uint64_t key = 0;
    const std::size_t width = order_ - 1;
    for (std::size_t i = 0; i < width; ++i) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(prefix.size()) - static_cast<std::ptrdiff_t>(width) +
                                 static_cast<std::ptrdiff_t>(i);
      const TokenId id = pos < 0 ? begin_id() : prefix[static_cast<std::size_t>(pos)];
      key = (key << 8) | static_cast<std::uint64_t>(id + 1);
    }
    return key;
  }

  std::vector<int> unpack_key(std::uint64_t key) const {
    std::vector<int> ids(order_ - 1);
    for (std::size_t i = ids.size(); i-- > 0;) {
      ids[i] = static_cast<int>(key & 0xff) - 1;
      key >>= 8;
    }
    return ids;
  }

  void add_counts(std::span<const TokenId> seq, double weight) {
    const std::size_t m = outcome_count();
    for (std::size_t t = 0; t <= seq.size(); ++t) {
      const TokenId next = t < seq.size() ? seq[t] : end_id();
      Entry& e = table_[context_key(seq.first(t))];
      if (e.counts.empty()) e.counts.assign(m, 0.0);
      e.counts[next] += weight;
      e.recompute_total();
    }
  }

  std::size_t order_ = kDefaultOrder;
  double smoothing_ = kDefaultSmoothing;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  std::unordered_map<std::uint64_t, Entry> table_;
};

/// Token texts of a SMILES string (throws on lexing failure).
inline std::vector<std::string> smiles_token_texts(std::string_view smiles) {
  std::vector<std::string> out;
  for (auto& t : chem::tokenize(smiles)) out.push_back(std::move(t.text));
  return out;
}

/// The full organic-subset vocabulary of the tokenizer (ring labels 1-9).
inline std::vector<std::string> base_vocabulary() {
  return {"C", "N", "O", "S", "P", "B", "F", "Cl", "Br", "I", "c", "n", "o", "s",
          "-", "=", "#", "(", ")", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
}

}  // namespace fastergts::policy
