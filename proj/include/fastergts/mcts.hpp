#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastergts/chem.hpp"
#include "fastergts/parallel.hpp"
#include "fastergts/policy.hpp"
#include "fastergts/reward.hpp"
#include "fastergts/rng.hpp"

namespace fastergts::mcts {

using policy::Sequence;
using policy::SequencePolicy;
using policy::TokenId;
using reward::ScoredMolecule;

using NodeId = std::uint32_t;
inline constexpr TokenId kRootAction = 0xFFFF;
inline constexpr NodeId kNoParent = 0xFFFFFFFFu;

struct MctsConfig {
  double exploration = 1.5;
  std::size_t rollouts = 8;
  double mix = 0.8;
  std::size_t expand_samples = 5;
  double reexpand_probability = 0.1;

  void validate() const {
    if (!(exploration >= 0.0)) throw std::invalid_argument("mcts exploration must be >= 0");
    if (rollouts == 0) throw std::invalid_argument("mcts rollouts must be >= 1");
    if (!(mix >= 0.0 && mix <= 1.0)) throw std::invalid_argument("mcts mix must be in [0, 1]");
    if (expand_samples == 0) throw std::invalid_argument("mcts expand_samples must be >= 1");
    if (!(reexpand_probability >= 0.0 && reexpand_probability <= 1.0)) {
      throw std::invalid_argument("mcts reexpand_probability must be in [0, 1]");
    }
  }

  /// Rollouts drawn from the self-trained policy; the rest use the prior.
  std::size_t chi_rollouts() const {
    return static_cast<std::size_t>(std::ceil(mix * static_cast<double>(rollouts) - 1e-9));
  }
};

struct TreeNode {
  TokenId action = kRootAction;
  double prior_p = 1.0;
  std::uint64_t visits = 0;       // N
  double reward_sum = 0.0;        // S
  std::uint64_t valid_count = 0;  // N_v
  std::uint64_t win_count = 0;    // N_w
  std::vector<NodeId> children;
  NodeId parent = kNoParent;
  std::uint32_t depth = 0;
  bool is_terminal = false;
  bool is_shortcut = false;

  double q() const { return reward_sum / (1.0 + static_cast<double>(valid_count)); }
};

struct RolloutResult {
  std::vector<ScoredMolecule> terminals;
  std::size_t n_valid = 0;
  std::size_t n_win = 0;
  bool penalty = false;

  double reward_sum() const {
    double s = 0.0;
    for (const auto& m : terminals) s += m.reward;
    return s;
  }
};

inline constexpr double kPenalty = -1.0;

/// Arena-allocated search tree over policy token ids. Node 0 is the root.
class Tree {
 public:
  Tree() { nodes_.emplace_back(); }

  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  /// Tokens from the root to `id`, excluding the end marker.
  Sequence prefix(NodeId id) const {
    Sequence out;
    for (NodeId cur = id; cur != root(); cur = nodes_[cur].parent) {
      if (!nodes_[cur].is_terminal) out.push_back(nodes_[cur].action);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Root-to-node path, inclusive.
  std::vector<NodeId> path(NodeId id) const {
    std::vector<NodeId> out;
    for (NodeId cur = id; cur != kNoParent; cur = nodes_[cur].parent) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::optional<NodeId> find_child(NodeId id, TokenId action) const {
    for (NodeId c : nodes_[id].children) {
      if (nodes_[c].action == action) return c;
    }
    return std::nullopt;
  }

  /// Argmax of Q + c P sqrt(sum of sibling N) / (1 + N); first child wins
  /// ties. Increments the chosen child's N.
  NodeId select_child(NodeId id, double c) {
    const auto& kids = nodes_.at(id).children;
    if (kids.empty()) throw std::logic_error("select_child: node has no children");
    double total = 0.0;
    for (NodeId k : kids) total += static_cast<double>(nodes_[k].visits);
    const double root_total = std::sqrt(total);
    NodeId best = kids.front();
    double best_score = -INFINITY;
    for (NodeId k : kids) {
      const auto& n = nodes_[k];
      const double score = n.q() + c * n.prior_p * root_total / (1.0 + static_cast<double>(n.visits));
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    ++nodes_[best].visits;
    nodes_[best].is_shortcut = false;
    return best;
  }

  /// Samples `samples` actions from the prior at the node's state and adds
  /// the ones not already present as children. Returns the new node ids.
  std::vector<NodeId> expand(NodeId id, const SequencePolicy& prior, std::size_t samples, Seed seed) {
    if (nodes_.at(id).is_terminal) throw std::logic_error("expand: terminal node");
    std::vector<NodeId> added;
    const Sequence pre = prefix(id);
    const auto dist = prior.next_distribution(pre);
    Rng rng = make_rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
      const auto a = static_cast<TokenId>(sample_weighted(rng, dist));
      // Past the token limit only the end marker can still give a valid molecule.
      if (pre.size() >= chem::kMaxTokens && a != prior.end_id()) continue;
      if (find_child(id, a)) continue;
      added.push_back(add_child(id, a, dist[a], prior.end_id()));
    }
    return added;
  }

  /// Adds the rollout statistics to every node from `id` up to the root. A
  /// penalty contributes S += -1 and nothing else.
  void backup(NodeId id, const RolloutResult& r) {
    if (r.penalty) {
      apply(id, kPenalty, 0, 0);
    } else {
      apply(id, r.reward_sum(), r.n_valid, r.n_win);
    }
  }

  void apply(NodeId id, double ds, std::uint64_t dnv, std::uint64_t dnw) {
    for (NodeId cur = id; cur != kNoParent; cur = nodes_[cur].parent) {
      auto& n = nodes_[cur];
      n.reward_sum += ds;
      n.valid_count += dnv;
      n.win_count += dnw;
    }
  }

  /// Grafts the molecule's token path (plus end marker) onto the tree and
  /// backs up its own reward once. Returns the terminal node, or nothing when
  /// the molecule uses tokens outside the prior's vocabulary.
  std::optional<NodeId> insert_shortcut(const ScoredMolecule& m, const SequencePolicy& prior) {
    std::vector<chem::Token> toks;
    if (chem::try_tokenize(m.canonical, toks) || toks.size() > chem::kMaxTokens) return std::nullopt;
    const auto seq = prior.encode(toks);
    if (!seq) return std::nullopt;
    NodeId cur = root();
    Sequence pre;
    std::vector<double> dist;
    for (std::size_t i = 0; i <= seq->size(); ++i) {
      const TokenId a = i < seq->size() ? (*seq)[i] : prior.end_id();
      if (auto existing = find_child(cur, a)) {
        cur = *existing;
      } else {
        prior.next_distribution(pre, dist);
        cur = add_child(cur, a, dist[a], prior.end_id());
        nodes_[cur].is_shortcut = true;
        ++shortcut_nodes_created_;
      }
      if (i < seq->size()) pre.push_back(a);
    }
    apply(cur, m.reward, 1, static_cast<std::uint64_t>(reward::is_winning(m.reward)));
    return cur;
  }

  void clear_shortcut_flag(NodeId id) { nodes_.at(id).is_shortcut = false; }

  /// Raw node access for tools and tests that need to stage statistics.
  TreeNode& mutable_node(NodeId id) { return nodes_.at(id); }

  NodeId add_child(NodeId parent, TokenId a, double p, TokenId end_id) {
    if (find_child(parent, a)) throw std::logic_error("add_child: duplicate action");
    TreeNode child;
    child.action = a;
    child.prior_p = p;
    child.parent = parent;
    child.depth = nodes_.at(parent).depth + 1;
    child.is_terminal = a == end_id;
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::move(child));
    nodes_[parent].children.push_back(id);
    return id;
  }

  /// Nodes ever created by insert_shortcut, whether or not later visited.
  std::size_t shortcut_nodes_created() const { return shortcut_nodes_created_; }

  std::size_t shortcut_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_shortcut; }));
  }

  /// Debug dump of the `top_k` nodes by N_v (ties by node id).
  nlohmann::json dump(const SequencePolicy& vocab, std::size_t top_k) const {
    std::vector<NodeId> ids(nodes_.size());
    for (NodeId i = 0; i < ids.size(); ++i) ids[i] = i;
    std::stable_sort(ids.begin(), ids.end(),
                     [&](NodeId a, NodeId b) { return nodes_[a].valid_count > nodes_[b].valid_count; });
    if (ids.size() > top_k) ids.resize(top_k);
    nlohmann::json out = nlohmann::json::array();
    for (NodeId i : ids) {
      const auto& n = nodes_[i];
      std::string pre = vocab.decode(prefix(i));
      if (n.is_terminal) pre += "$";
      out.push_back({{"prefix", pre},
                     {"P", n.prior_p},
                     {"N", n.visits},
                     {"S", n.reward_sum},
                     {"N_v", n.valid_count},
                     {"N_w", n.win_count},
                     {"is_shortcut", n.is_shortcut}});
    }
    return out;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t shortcut_nodes_created_ = 0;
};

/// Everything a search step reads but does not own.
struct SearchContext {
  const SequencePolicy* chi = nullptr;    // self-trained policy used for most rollouts
  const SequencePolicy* gamma = nullptr;  // fixed prior used for expansion and the remaining rollouts
  reward::Scorer scorer;
  MctsConfig config;
  std::size_t threads = 1;
};

namespace detail {

inline void tally(RolloutResult& r) {
  r.n_valid = r.terminals.size();
  r.n_win = 0;
  for (const auto& m : r.terminals) r.n_win += static_cast<std::size_t>(reward::is_winning(m.reward));
  r.penalty = r.n_valid == 0;
}

}  // namespace detail

/// Completes the node's prefix n_r times (ceil(mix n_r) with chi, the rest
/// with gamma) and scores the valid completions. A terminal node is scored
/// as itself.
inline RolloutResult evaluate(const Tree& tree, NodeId id, const SearchContext& ctx, Seed seed) {
  RolloutResult r;
  const Sequence pre = tree.prefix(id);
  const SequencePolicy& vocab = *ctx.gamma;
  if (tree.node(id).is_terminal) {
    if (auto m = ctx.scorer.score_smiles(vocab.decode(pre))) r.terminals.push_back(std::move(*m));
    detail::tally(r);
    return r;
  }
  const std::size_t n = ctx.config.rollouts;
  const std::size_t n_chi = ctx.config.chi_rollouts();
  std::vector<std::optional<ScoredMolecule>> slots(n);
  parallel_for(n, ctx.threads, [&](std::size_t i) {
    const SequencePolicy& pol = i < n_chi ? *ctx.chi : *ctx.gamma;
    const auto c = pol.sample_completion(pre, derive_seed(seed, {i}), chem::kMaxTokens + 1);
    if (c.truncated) return;
    slots[i] = ctx.scorer.score_smiles(pol.decode(c.tokens));
  });
  for (auto& s : slots) {
    if (s) r.terminals.push_back(std::move(*s));
  }
  detail::tally(r);
  return r;
}

struct StepResult {
  NodeId evaluated = 0;
  RolloutResult result;
};

/// One select / expand / evaluate / backup iteration.
inline StepResult step(Tree& tree, const SearchContext& ctx, Seed seed) {
  const auto& cfg = ctx.config;
  Rng rng = make_rng(derive_seed(seed, {0}));
  auto pick_new = [&](const std::vector<NodeId>& added) {
    NodeId best = added.front();
    for (NodeId c : added) {
      if (tree.node(c).prior_p > tree.node(best).prior_p) best = c;
    }
    return best;
  };

  NodeId cur = tree.root();
  std::optional<NodeId> fresh;
  std::uint64_t expand_label = 1;
  while (!tree.node(cur).is_terminal && !tree.node(cur).children.empty()) {
    if (tree.node(cur).children.size() < ctx.gamma->outcome_count() && bernoulli(rng, cfg.reexpand_probability)) {
      const auto added = tree.expand(cur, *ctx.gamma, cfg.expand_samples, derive_seed(seed, {1, expand_label++}));
      if (!added.empty()) {
        fresh = pick_new(added);
        break;
      }
    }
    cur = tree.select_child(cur, cfg.exploration);
  }
  if (!fresh && !tree.node(cur).is_terminal) {
    const auto added = tree.expand(cur, *ctx.gamma, cfg.expand_samples, derive_seed(seed, {1, expand_label++}));
    if (!added.empty()) fresh = pick_new(added);
  }
  const NodeId target = fresh.value_or(cur);
  tree.clear_shortcut_flag(target);

  StepResult out;
  out.evaluated = target;
  out.result = evaluate(tree, target, ctx, derive_seed(seed, {2}));
  tree.backup(target, out.result);
  return out;
}

}  // namespace fastergts::mcts
