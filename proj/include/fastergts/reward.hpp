#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastergts/chem.hpp"
#include "fastergts/policy.hpp"
#include "fastergts/rng.hpp"

namespace fastergts::reward {

using Features = chem::Descriptors;

/// Synthetic stand-in for a cell line's multi-omics vector.
struct SampleProfile {
  std::string id;
  Features features{};
};

enum class PanelRole : std::uint8_t { training, verification };

inline std::string_view to_string(PanelRole role) {
  return role == PanelRole::training ? "training" : "verification";
}

struct Panel {
  std::vector<SampleProfile> profiles;
  PanelRole role = PanelRole::training;

  std::size_t size() const { return profiles.size(); }

  /// "<role>:<fnv1a of member ids>", used to tag which panel produced a z.
  std::string tag() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : profiles) {
      for (char c : p.id) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
      h = (h ^ 0xffU) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(to_string(role)) + ":" + buf;
  }
};

inline void validate_profile(const SampleProfile& p) {
  for (double x : p.features) {
    if (!std::isfinite(x)) throw std::invalid_argument("profile " + p.id + " has non-finite features");
  }
}

inline void validate_panel(const Panel& panel) {
  if (panel.profiles.size() < 2) throw std::invalid_argument("panel needs at least 2 profiles");
  std::set<std::string> ids;
  for (const auto& p : panel.profiles) {
    validate_profile(p);
    if (!ids.insert(p.id).second) throw std::invalid_argument("duplicate profile id in panel: " + p.id);
  }
}

inline void check_disjoint(const Panel& training, const Panel& verification) {
  std::set<std::string> ids;
  for (const auto& p : training.profiles) ids.insert(p.id);
  for (const auto& p : verification.profiles) {
    if (ids.count(p.id)) throw std::invalid_argument("training and verification panels share profile " + p.id);
  }
}

struct RewardConfig {
  double alpha = -1.0;
  double beta = 1.0;
  double theta_t = 1.0;
  double theta_z = 0.0;

  void validate() const {
    if (!(alpha < 0.0)) throw std::invalid_argument("reward alpha must be < 0");
    if (!(beta > 0.0)) throw std::invalid_argument("reward beta must be > 0");
    if (!std::isfinite(theta_t) || !std::isfinite(theta_z)) throw std::invalid_argument("reward thresholds must be finite");
  }

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct ScoredMolecule {
  std::string canonical;
  std::string raw;
  double y_t = 0.0;
  double y_z = 0.0;
  double reward = 1.0;
  std::optional<double> y_z_verify;
};

/// Predicts a potency score (lower is more potent) for a molecule against a
/// sample profile. Implementations must be deterministic and thread-safe.
class ValueOracle {
 public:
  virtual ~ValueOracle() = default;
  virtual double score(const chem::MolecularGraph& g, const SampleProfile& profile) const = 0;

  /// Scores one molecule against many profiles. Override when per-molecule
  /// work can be shared.
  virtual std::vector<double> score_all(const chem::MolecularGraph& g, std::span<const SampleProfile> profiles) const {
    std::vector<double> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) out.push_back(score(g, p));
    return out;
  }
};

inline constexpr double kSurrogateMin = -6.0;
inline constexpr double kSurrogateMax = 6.0;

inline double surrogate_from_descriptors(const chem::Descriptors& d, const Features& f, double bias) {
  double dot = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) dot += f[i] * d[i];
  return std::clamp(bias + dot, kSurrogateMin, kSurrogateMax);
}

/// clamp(bias + features . descriptors(g), -6, 6)
inline double surrogate_score(const chem::MolecularGraph& g, const SampleProfile& c, double bias) {
  return surrogate_from_descriptors(chem::descriptors(g), c.features, bias);
}

class SurrogateOracle final : public ValueOracle {
 public:
  explicit SurrogateOracle(double bias = 0.0) : bias_(bias) {}

  double bias() const { return bias_; }

  double score(const chem::MolecularGraph& g, const SampleProfile& profile) const override {
    return surrogate_score(g, profile, bias_);
  }

  std::vector<double> score_all(const chem::MolecularGraph& g, std::span<const SampleProfile> profiles) const override {
    const auto d = chem::descriptors(g);
    std::vector<double> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) out.push_back(surrogate_from_descriptors(d, p.features, bias_));
    return out;
  }

 private:
  double bias_;
};

inline std::vector<double> adversary_scores(const chem::MolecularGraph& g, const Panel& panel, const ValueOracle& oracle) {
  if (panel.profiles.empty()) throw std::invalid_argument("adversary_scores: empty panel");
  return oracle.score_all(g, panel.profiles);
}

inline constexpr double kDegenerateStddev = 1e-12;

/// (y_t - mean) / population stddev; 0 when the panel is flat.
inline double z_score(double y_t, std::span<const double> y_a) {
  if (y_a.size() < 2) throw std::invalid_argument("z_score: panel too small");
  double mean = 0.0;
  for (double y : y_a) mean += y;
  mean /= static_cast<double>(y_a.size());
  double var = 0.0;
  for (double y : y_a) var += (y - mean) * (y - mean);
  var /= static_cast<double>(y_a.size());
  const double sd = std::sqrt(var);
  if (sd < kDegenerateStddev) return 0.0;
  return (y_t - mean) / sd;
}

/// exp(alpha (y_z - theta_z)) + beta ln(theta_t - y_t + 1) inside the
/// threshold region, exactly 1 outside it.
inline double reward(double y_t, double y_z, const RewardConfig& cfg) {
  if (y_t <= cfg.theta_t && y_z <= cfg.theta_z) {
    return std::exp(cfg.alpha * (y_z - cfg.theta_z)) + cfg.beta * std::log(cfg.theta_t - y_t + 1.0);
  }
  return 1.0;
}

inline int is_winning(double r) { return r > 1.0 ? 1 : 0; }

inline ScoredMolecule score_molecule(const chem::MolecularGraph& g, const SampleProfile& target, const Panel& panel,
                                     const ValueOracle& oracle, const RewardConfig& cfg) {
  ScoredMolecule m;
  m.y_t = oracle.score(g, target);
  const auto y_a = adversary_scores(g, panel, oracle);
  m.y_z = z_score(m.y_t, y_a);
  m.reward = reward(m.y_t, m.y_z, cfg);
  return m;
}

inline double verification_z(const chem::MolecularGraph& g, double y_t, const Panel& verification,
                             const ValueOracle& oracle) {
  return z_score(y_t, adversary_scores(g, verification, oracle));
}

/// Bundles everything needed to turn a molecule into a ScoredMolecule.
struct Scorer {
  const SampleProfile* target = nullptr;
  const Panel* panel = nullptr;
  const ValueOracle* oracle = nullptr;
  RewardConfig config;

  ScoredMolecule score(const chem::MolecularGraph& g, std::string raw) const {
    auto m = score_molecule(g, *target, *panel, *oracle, config);
    m.canonical = chem::canonical_form(g);
    m.raw = std::move(raw);
    return m;
  }

  /// Parses and scores a SMILES string; nothing if it is not a valid molecule.
  std::optional<ScoredMolecule> score_smiles(const std::string& raw) const {
    const auto g = chem::try_parse_smiles(raw);
    if (!g) return std::nullopt;
    return score(*g, raw);
  }
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationOptions {
  std::size_t samples = 2000;
  std::size_t max_draws = 200000;
  std::size_t max_len = chem::kMaxTokens + 1;  // one past the limit so 100-token strings can end
  double alpha = -1.0;
  double beta = 1.0;
  double theta_t = 1.0;
  double wr_low = 0.01;
  double wr_high = 0.05;
  double theta_z_min = -4.0;
  double theta_z_max = 4.0;
};

struct CalibrationResult {
  RewardConfig config;
  double wr = 0.0;
  double rr = 0.0;
  std::size_t samples = 0;
  std::size_t draws = 0;
};

inline double winning_rate(std::span<const double> y_t, std::span<const double> y_z, double theta_t, double theta_z) {
  std::size_t wins = 0;
  for (std::size_t i = 0; i < y_t.size(); ++i) wins += (y_t[i] <= theta_t && y_z[i] <= theta_z);
  return y_t.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(y_t.size());
}

/// Fixes theta_t and bisects theta_z until the share of samples inside the
/// reward region lands in [wr_low, wr_high].
inline CalibrationResult calibrate_from_scores(std::span<const double> y_t, std::span<const double> y_z,
                                               const CalibrationOptions& opt = {}) {
  if (y_t.size() != y_z.size() || y_t.empty()) throw std::invalid_argument("calibrate: score vectors mismatch");
  auto wr_at = [&](double theta_z) { return winning_rate(y_t, y_z, opt.theta_t, theta_z); };
  double lo = opt.theta_z_min, hi = opt.theta_z_max;
  std::optional<double> found;
  if (const double w = wr_at(lo); w >= opt.wr_low && w <= opt.wr_high) found = lo;
  if (!found && wr_at(lo) > opt.wr_high) {
    throw CalibrationError("calibration failed: winning rate exceeds band even at theta_z = " + std::to_string(lo));
  }
  if (!found && wr_at(hi) < opt.wr_low) {
    throw CalibrationError("calibration failed: winning rate " + std::to_string(wr_at(hi)) +
                           " below band even at theta_z = " + std::to_string(hi));
  }
  for (int it = 0; it < 200 && !found; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double w = wr_at(mid);
    if (w < opt.wr_low) lo = mid;
    else if (w > opt.wr_high) hi = mid;
    else found = mid;
  }
  if (!found) throw CalibrationError("calibration failed: no theta_z in range reaches the winning-rate band");

  CalibrationResult res;
  res.config = RewardConfig{opt.alpha, opt.beta, opt.theta_t, *found};
  res.config.validate();
  res.samples = y_t.size();
  res.wr = wr_at(*found);
  double total = 0.0;
  for (std::size_t i = 0; i < y_t.size(); ++i) total += reward(y_t[i], y_z[i], res.config);
  res.rr = total / static_cast<double>(y_t.size());
  return res;
}

/// Samples valid molecules from the prior and calibrates theta_z on them.
inline CalibrationResult calibrate_thresholds(const policy::SequencePolicy& prior, const SampleProfile& target,
                                              const Panel& panel, const ValueOracle& oracle, Seed seed,
                                              const CalibrationOptions& opt = {}) {
  std::vector<double> y_t, y_z;
  y_t.reserve(opt.samples);
  y_z.reserve(opt.samples);
  std::size_t draws = 0;
  while (y_t.size() < opt.samples) {
    if (draws >= opt.max_draws) {
      throw CalibrationError("calibration failed: prior produced only " + std::to_string(y_t.size()) +
                             " valid molecules in " + std::to_string(draws) + " draws");
    }
    const auto c = prior.sample_completion({}, derive_seed(seed, {draws}), opt.max_len);
    ++draws;
    if (c.truncated || c.tokens.empty()) continue;
    const auto g = chem::try_parse_smiles(prior.decode(c.tokens));
    if (!g) continue;
    const double t = oracle.score(*g, target);
    y_t.push_back(t);
    y_z.push_back(z_score(t, adversary_scores(*g, panel, oracle)));
  }
  auto res = calibrate_from_scores(y_t, y_z, opt);
  res.draws = draws;
  return res;
}

}  // namespace fastergts::reward
