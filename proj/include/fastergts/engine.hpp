#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastergts/chem.hpp"
#include "fastergts/ga.hpp"
#include "fastergts/mcts.hpp"
#include "fastergts/policy.hpp"
#include "fastergts/queue.hpp"
#include "fastergts/reward.hpp"
#include "fastergts/rng.hpp"

namespace fastergts::engine {

struct Ablations {
  bool no_ga = false;
  bool no_self_train = false;
  bool no_mcts = false;

  friend bool operator==(const Ablations&, const Ablations&) = default;
};

/// Parses a comma-separated list such as "no-ga,no-self-train".
inline Ablations parse_ablations(std::string_view text) {
  Ablations a;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "no-ga") a.no_ga = true;
    else if (item == "no-self-train") a.no_self_train = true;
    else if (item == "no-mcts") a.no_mcts = true;
    else if (!item.empty()) throw std::invalid_argument("unknown ablation: " + std::string(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return a;
}

inline std::vector<std::string> ablation_names(const Ablations& a) {
  std::vector<std::string> out;
  if (a.no_ga) out.emplace_back("no-ga");
  if (a.no_self_train) out.emplace_back("no-self-train");
  if (a.no_mcts) out.emplace_back("no-mcts");
  return out;
}

struct RunConfig {
  std::size_t budget = 10000;                  // valid samplings
  std::size_t mcts_steps_per_iteration = 10;
  std::size_t ga_children_per_iteration = 40;  // valid GA-phase samplings, prior parents included
  std::size_t self_train_batch = 64;
  double self_train_weight = 1.0;
  std::size_t queue_capacity = 1000;
  std::size_t max_iterations = 100000;
  std::size_t top_k = 10;
  Ablations ablation;
  Seed seed = 1;
  std::size_t threads = 1;
  mcts::MctsConfig mcts;
  ga::GaConfig ga;

  void validate() const {
    if (budget == 0) throw std::invalid_argument("run budget must be > 0");
    if (ablation.no_mcts && ablation.no_ga) throw std::invalid_argument("ablation no-mcts requires the GA to stay enabled");
    if (!ablation.no_mcts && mcts_steps_per_iteration == 0) throw std::invalid_argument("mcts_steps_per_iteration must be > 0");
    if (!ablation.no_ga && ga_children_per_iteration == 0) throw std::invalid_argument("ga_children_per_iteration must be > 0");
    if (!ablation.no_self_train && self_train_batch == 0) throw std::invalid_argument("self_train_batch must be > 0");
    if (!(self_train_weight >= 0.0)) throw std::invalid_argument("self_train_weight must be >= 0");
    if (queue_capacity == 0) throw std::invalid_argument("queue_capacity must be > 0");
    if (max_iterations == 0) throw std::invalid_argument("max_iterations must be > 0");
    if (threads == 0) throw std::invalid_argument("threads must be >= 1");
    mcts.validate();
    ga.validate();
  }
};

struct IterationMetrics {
  std::size_t iteration = 0;
  std::size_t n_valid = 0;
  std::size_t n_win = 0;
  double wr = 0.0;
  double rr = 0.0;
  double best_reward = 0.0;
  std::size_t queue_size = 0;
};

struct VerifiedEntry {
  QueueEntry entry;
  double y_z_verify = 0.0;
};

struct RunInputs {
  const policy::SequencePolicy* prior = nullptr;
  const reward::SampleProfile* target = nullptr;
  const reward::Panel* training = nullptr;
  const reward::Panel* verification = nullptr;
  const reward::ValueOracle* oracle = nullptr;
  reward::RewardConfig reward;
};

struct RunResult {
  PriorityQueue queue{1};
  std::vector<VerifiedEntry> ranked;  // whole queue in top-k order, with verification z
  std::vector<IterationMetrics> metrics;
  std::size_t total_valid = 0;
  std::size_t shortcut_nodes = 0;  // created by GA shortcuts over the run
  std::size_t tree_size = 0;
  bool hit_iteration_limit = false;
  policy::SequencePolicy chi;
  std::string training_tag;
  std::string verification_tag;

  std::vector<VerifiedEntry> top(std::size_t k) const {
    return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size()))};
  }

  double mean_top_reward(std::size_t k) const {
    const auto t = top(k);
    if (t.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : t) s += e.entry.reward;
    return s / static_cast<double>(t.size());
  }
};

namespace detail {

struct IterationTally {
  std::size_t n_valid = 0;
  std::size_t n_win = 0;
  double reward_sum = 0.0;
};

inline std::size_t even_ceil(std::size_t x) { return x + (x % 2); }

}  // namespace detail

/// Runs search iterations until the valid-sampling budget is spent. Each
/// iteration: MCTS steps, a GA phase, self-training of the search policy on
/// a queue batch, then shortcut insertion for newly admitted GA molecules.
inline RunResult run(const RunConfig& cfg, const RunInputs& in) {
  cfg.validate();
  in.reward.validate();
  reward::validate_panel(*in.training);
  reward::validate_panel(*in.verification);
  reward::check_disjoint(*in.training, *in.verification);
  reward::validate_profile(*in.target);

  const policy::SequencePolicy& gamma = *in.prior;
  RunResult res;
  res.queue = PriorityQueue(cfg.queue_capacity);
  res.chi = gamma;
  res.training_tag = in.training->tag();
  res.verification_tag = in.verification->tag();

  const reward::Scorer scorer{in.target, in.training, in.oracle, in.reward};
  mcts::Tree tree;
  mcts::SearchContext ctx;
  ctx.chi = &res.chi;
  ctx.gamma = &gamma;
  ctx.scorer = scorer;
  ctx.config = cfg.mcts;
  ctx.threads = cfg.threads;

  for (std::size_t it = 1; res.total_valid < cfg.budget; ++it) {
    if (it > cfg.max_iterations) {
      res.hit_iteration_limit = true;
      break;
    }
    detail::IterationTally tally;
    auto record = [&](const reward::ScoredMolecule& m, Source source) {
      ++tally.n_valid;
      tally.n_win += static_cast<std::size_t>(reward::is_winning(m.reward));
      tally.reward_sum += m.reward;
      return res.queue.admit(m, source, it);
    };

    if (!cfg.ablation.no_mcts) {
      for (std::size_t s = 0; s < cfg.mcts_steps_per_iteration; ++s) {
        const auto r = mcts::step(tree, ctx, derive_seed(cfg.seed, {1, it, s}));
        for (const auto& m : r.result.terminals) record(m, Source::mcts);
      }
    }

    std::vector<reward::ScoredMolecule> admitted_ga;
    if (!cfg.ablation.no_ga) {
      std::size_t produced = 0;
      for (std::uint64_t round = 0; produced < cfg.ga_children_per_iteration && round < 64; ++round) {
        const std::size_t remaining = cfg.ga_children_per_iteration - produced;
        const std::size_t population = std::max<std::size_t>(2, std::min(cfg.ga.population, detail::even_ceil(remaining)));
        const Seed round_seed = derive_seed(cfg.seed, {2, it, round});
        const auto parents = ga::select_parents(res.queue, gamma, population, derive_seed(round_seed, {0}));
        for (const auto& raw : parents.prior_smiles) {
          if (auto m = scorer.score_smiles(raw)) {
            record(*m, Source::prior);
            ++produced;
          }
        }
        auto ga_cfg = cfg.ga;
        ga_cfg.population = population;
        for (const auto& child : ga::breed(parents.graphs, ga_cfg, derive_seed(round_seed, {1}))) {
          auto m = scorer.score(child, chem::canonical_form(child));
          ++produced;
          if (record(m, Source::ga)) admitted_ga.push_back(std::move(m));
        }
      }
    }

    if (!cfg.ablation.no_self_train && !res.queue.empty()) {
      Rng rng = make_rng(derive_seed(cfg.seed, {3, it}));
      std::vector<policy::Sequence> batch;
      for (const auto* e : res.queue.sample_without_replacement(rng, cfg.self_train_batch)) {
        auto seq = res.chi.encode(policy::smiles_token_texts(e->raw));
        if (!seq) seq = res.chi.encode(policy::smiles_token_texts(e->canonical));
        if (seq) batch.push_back(std::move(*seq));
      }
      if (!batch.empty()) res.chi.fine_tune(batch, cfg.self_train_weight);
    }

    if (!cfg.ablation.no_ga && !cfg.ablation.no_mcts) {
      for (const auto& m : admitted_ga) {
        // Only molecules that are still queued (not evicted by a later child) get a path.
        if (const auto* e = res.queue.find(m.canonical); e && e->reward == m.reward) tree.insert_shortcut(m, gamma);
      }
    }

    IterationMetrics met;
    met.iteration = it;
    met.n_valid = tally.n_valid;
    met.n_win = tally.n_win;
    met.wr = tally.n_valid ? static_cast<double>(tally.n_win) / static_cast<double>(tally.n_valid) : 0.0;
    met.rr = tally.n_valid ? tally.reward_sum / static_cast<double>(tally.n_valid) : 0.0;
    const auto best = res.queue.top_k(1);
    met.best_reward = best.empty() ? 0.0 : best.front().reward;
    met.queue_size = res.queue.size();
    res.metrics.push_back(met);
    res.total_valid += tally.n_valid;
  }

  for (auto& e : res.queue.top_k(res.queue.size())) {
    const auto g = chem::parse_smiles(e.canonical);
    const double yzv = reward::verification_z(g, e.y_t, *in.verification, *in.oracle);
    res.ranked.push_back({std::move(e), yzv});
  }
  res.shortcut_nodes = tree.shortcut_nodes_created();
  res.tree_size = tree.size();
  return res;
}

}  // namespace fastergts::engine
