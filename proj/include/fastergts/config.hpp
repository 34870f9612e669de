#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <toml.hpp>

#include "fastergts/engine.hpp"
#include "fastergts/policy.hpp"
#include "fastergts/reward.hpp"

namespace fastergts::config {

namespace fs = std::filesystem;

/// Malformed config text, unknown keys, bad types or out-of-range values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Paths {
  fs::path corpus;
  fs::path prior;  // fitted policy JSON; empty means fit from the corpus
  fs::path targets;
  std::string target = "target-default";
  fs::path training_panel;
  fs::path verification_panel;
  fs::path out_dir = "out";
};

struct ConfigFile {
  Seed seed = 1;
  std::size_t threads = 1;
  Paths paths;
  std::size_t policy_order = policy::kDefaultOrder;
  double policy_smoothing = policy::kDefaultSmoothing;
  double oracle_bias = 0.0;
  reward::RewardConfig reward;
  bool theta_z_set = false;  // false: calibrate before running
  reward::CalibrationOptions calibration;
  Seed calibration_seed = 1;
  engine::RunConfig run;

  /// RunConfig with the top-level seed and thread count folded in.
  engine::RunConfig run_config() const {
    auto r = run;
    r.seed = seed;
    r.threads = threads;
    return r;
  }

  void validate() const {
    if (threads == 0) throw ConfigError("threads must be >= 1");
    if (policy_order == 0) throw ConfigError("policy.order must be >= 1");
    if (!(policy_smoothing > 0.0)) throw ConfigError("policy.smoothing must be > 0");
    if (calibration.samples == 0) throw ConfigError("calibration.samples must be >= 1");
    if (!(calibration.wr_low <= calibration.wr_high)) throw ConfigError("calibration.wr_low must be <= wr_high");
    if (!(calibration.theta_z_min < calibration.theta_z_max)) throw ConfigError("calibration.theta_z_min must be < theta_z_max");
    try {
      reward.validate();
      run_config().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string key_path(std::string_view table, std::string_view key) {
  return table.empty() ? std::string(key) : std::string(table) + "." + std::string(key);
}

class Reader {
 public:
  Reader(const toml::table& t, std::string table) : t_(t), table_(std::move(table)) {}

  template <typename T>
  void number(std::string_view key, T& out) {
    const auto* node = t_.get(key);
    seen_.insert(std::string(key));
    if (!node) return;
    if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node->value<double>()) {
        out = static_cast<T>(*v);
        return;
      }
      throw ConfigError(key_path(table_, key) + " must be a number");
    } else {
      const auto v = node->value<std::int64_t>();
      if (!v || !node->is_integer()) throw ConfigError(key_path(table_, key) + " must be an integer");
      if (*v < 0) throw ConfigError(key_path(table_, key) + " must be >= 0");
      out = static_cast<T>(*v);
    }
  }

  bool optional_number(std::string_view key, double& out) {
    const bool present = t_.contains(key);
    number(key, out);
    return present;
  }

  void string(std::string_view key, std::string& out) {
    const auto* node = t_.get(key);
    seen_.insert(std::string(key));
    if (!node) return;
    const auto v = node->value<std::string>();
    if (!v) throw ConfigError(key_path(table_, key) + " must be a string");
    out = *v;
  }

  void path(std::string_view key, fs::path& out, const fs::path& base) {
    std::string s;
    const bool present = t_.contains(key);
    string(key, s);
    if (!present) return;
    out = s.empty() ? fs::path() : (fs::path(s).is_absolute() ? fs::path(s) : base / s);
  }

  void table(std::string_view key) { seen_.insert(std::string(key)); }

  void reject_unknown() const {
    for (const auto& [k, v] : t_) {
      if (!seen_.count(std::string(k.str()))) throw ConfigError("unknown config key: " + key_path(table_, k.str()));
    }
  }

 private:
  const toml::table& t_;
  std::string table_;
  std::set<std::string> seen_;
};

inline const toml::table& sub_table(const toml::table& root, std::string_view key) {
  static const toml::table empty;
  const auto* node = root.get(key);
  if (!node) return empty;
  if (!node->is_table()) throw ConfigError(std::string(key) + " must be a table");
  return *node->as_table();
}

}  // namespace detail

/// Applies every key in `root` on top of `cfg`. Relative paths resolve
/// against `base`. Keys not listed here are errors.
inline void apply(ConfigFile& cfg, const toml::table& root, const fs::path& base) {
  detail::Reader top(root, "");
  top.number("seed", cfg.seed);
  top.number("threads", cfg.threads);
  for (const char* t : {"paths", "policy", "oracle", "reward", "calibration", "run", "mcts", "ga"}) top.table(t);
  top.reject_unknown();

  {
    detail::Reader r(detail::sub_table(root, "paths"), "paths");
    r.path("corpus", cfg.paths.corpus, base);
    r.path("prior", cfg.paths.prior, base);
    r.path("targets", cfg.paths.targets, base);
    r.string("target", cfg.paths.target);
    r.path("training_panel", cfg.paths.training_panel, base);
    r.path("verification_panel", cfg.paths.verification_panel, base);
    r.path("out_dir", cfg.paths.out_dir, base);
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "policy"), "policy");
    r.number("order", cfg.policy_order);
    r.number("smoothing", cfg.policy_smoothing);
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "oracle"), "oracle");
    r.number("bias", cfg.oracle_bias);
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "reward"), "reward");
    r.number("alpha", cfg.reward.alpha);
    r.number("beta", cfg.reward.beta);
    r.number("theta_t", cfg.reward.theta_t);
    if (r.optional_number("theta_z", cfg.reward.theta_z)) cfg.theta_z_set = true;
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "calibration"), "calibration");
    auto& c = cfg.calibration;
    r.number("seed", cfg.calibration_seed);
    r.number("samples", c.samples);
    r.number("max_draws", c.max_draws);
    r.number("wr_low", c.wr_low);
    r.number("wr_high", c.wr_high);
    r.number("theta_z_min", c.theta_z_min);
    r.number("theta_z_max", c.theta_z_max);
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "run"), "run");
    auto& c = cfg.run;
    r.number("budget", c.budget);
    r.number("mcts_steps_per_iteration", c.mcts_steps_per_iteration);
    r.number("ga_children_per_iteration", c.ga_children_per_iteration);
    r.number("self_train_batch", c.self_train_batch);
    r.number("self_train_weight", c.self_train_weight);
    r.number("queue_capacity", c.queue_capacity);
    r.number("max_iterations", c.max_iterations);
    r.number("top_k", c.top_k);
    std::string ablation;
    const bool has_ablation = detail::sub_table(root, "run").contains("ablation");
    r.string("ablation", ablation);
    if (has_ablation) {
      try {
        c.ablation = engine::parse_ablations(ablation);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("run.ablation: ") + e.what());
      }
    }
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "mcts"), "mcts");
    auto& c = cfg.run.mcts;
    r.number("exploration", c.exploration);
    r.number("rollouts", c.rollouts);
    r.number("mix", c.mix);
    r.number("expand_samples", c.expand_samples);
    r.number("reexpand_probability", c.reexpand_probability);
    r.reject_unknown();
  }
  {
    detail::Reader r(detail::sub_table(root, "ga"), "ga");
    auto& c = cfg.run.ga;
    r.number("population", c.population);
    r.number("crossover_rate", c.crossover_rate);
    r.number("mutation_rate", c.mutation_rate);
    r.number("max_attempts", c.max_attempts);
    r.reject_unknown();
  }
  cfg.calibration.alpha = cfg.reward.alpha;
  cfg.calibration.beta = cfg.reward.beta;
  cfg.calibration.theta_t = cfg.reward.theta_t;
}

inline toml::table parse_text(std::string_view text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
}

/// Turns "run.budget=200" into a one-key TOML table. Values that do not
/// parse as TOML are taken as bare strings.
inline toml::table override_table(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("--set expects key=value, got: " + std::string(assignment));
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  std::string dotted_key;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: malformed key " + key);
    if (!dotted_key.empty()) dotted_key += '.';
    dotted_key += '"' + part + '"';
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return toml::parse(dotted_key + " = " + value);
  } catch (const toml::parse_error&) {
    toml::table t;
    std::string quoted = "\"";
    for (char c : value) {
      if (c == '"' || c == '\\') quoted += '\\';
      quoted += c;
    }
    quoted += '"';
    return parse_text(dotted_key + " = " + quoted, "--set " + key);
  }
}

/// Loads defaults, then the file (if any), then each --set override in order.
inline ConfigFile load(const std::optional<fs::path>& file, const std::vector<std::string>& overrides = {}) {
  ConfigFile cfg;
  fs::path base = fs::current_path();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    base = fs::absolute(*file).parent_path();
    apply(cfg, parse_text(ss.str(), file->string()), base);
  }
  for (const auto& o : overrides) apply(cfg, override_table(o), fs::current_path());
  cfg.validate();
  return cfg;
}

inline std::string format_real(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  std::string s = os.str();
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

/// Fully resolved config as TOML. Paths are absolute; theta_z is written
/// whenever it is known, so re-running the echo skips calibration.
inline std::string to_toml(const ConfigFile& cfg) {
  auto q = [](const fs::path& p) {
    std::string s = "\"";
    for (char c : p.string()) {
      if (c == '"' || c == '\\') s += '\\';
      s += c;
    }
    return s + "\"";
  };
  auto abs = [](const fs::path& p) { return p.empty() ? p : fs::absolute(p).lexically_normal(); };
  const auto& r = cfg.run;
  std::ostringstream os;
  os << "seed = " << cfg.seed << "\n";
  os << "threads = " << cfg.threads << "\n\n";
  os << "[paths]\n";
  os << "corpus = " << q(abs(cfg.paths.corpus)) << "\n";
  os << "prior = " << q(abs(cfg.paths.prior)) << "\n";
  os << "targets = " << q(abs(cfg.paths.targets)) << "\n";
  os << "target = " << q(cfg.paths.target) << "\n";
  os << "training_panel = " << q(abs(cfg.paths.training_panel)) << "\n";
  os << "verification_panel = " << q(abs(cfg.paths.verification_panel)) << "\n";
  os << "out_dir = " << q(abs(cfg.paths.out_dir)) << "\n\n";
  os << "[policy]\norder = " << cfg.policy_order << "\nsmoothing = " << format_real(cfg.policy_smoothing) << "\n\n";
  os << "[oracle]\nbias = " << format_real(cfg.oracle_bias) << "\n\n";
  os << "[reward]\nalpha = " << format_real(cfg.reward.alpha) << "\nbeta = " << format_real(cfg.reward.beta)
     << "\ntheta_t = " << format_real(cfg.reward.theta_t) << "\n";
  if (cfg.theta_z_set) os << "theta_z = " << format_real(cfg.reward.theta_z) << "\n";
  os << "\n[calibration]\nseed = " << cfg.calibration_seed << "\nsamples = " << cfg.calibration.samples
     << "\nmax_draws = " << cfg.calibration.max_draws << "\nwr_low = " << format_real(cfg.calibration.wr_low)
     << "\nwr_high = " << format_real(cfg.calibration.wr_high)
     << "\ntheta_z_min = " << format_real(cfg.calibration.theta_z_min)
     << "\ntheta_z_max = " << format_real(cfg.calibration.theta_z_max) << "\n\n";
  std::string ablation;
  for (const auto& n : engine::ablation_names(r.ablation)) ablation += (ablation.empty() ? "" : ",") + n;
  os << "[run]\nbudget = " << r.budget << "\nmcts_steps_per_iteration = " << r.mcts_steps_per_iteration
     << "\nga_children_per_iteration = " << r.ga_children_per_iteration << "\nself_train_batch = " << r.self_train_batch
     << "\nself_train_weight = " << format_real(r.self_train_weight) << "\nqueue_capacity = " << r.queue_capacity
     << "\nmax_iterations = " << r.max_iterations << "\ntop_k = " << r.top_k << "\nablation = \"" << ablation
     << "\"\n\n";
  os << "[mcts]\nexploration = " << format_real(r.mcts.exploration) << "\nrollouts = " << r.mcts.rollouts
     << "\nmix = " << format_real(r.mcts.mix) << "\nexpand_samples = " << r.mcts.expand_samples
     << "\nreexpand_probability = " << format_real(r.mcts.reexpand_probability) << "\n\n";
  os << "[ga]\npopulation = " << r.ga.population << "\ncrossover_rate = " << format_real(r.ga.crossover_rate)
     << "\nmutation_rate = " << format_real(r.ga.mutation_rate) << "\nmax_attempts = " << r.ga.max_attempts << "\n";
  return os.str();
}

/// Reward section written by the calibrate command, plus what it achieved.
inline std::string reward_to_toml(const reward::CalibrationResult& c) {
  std::ostringstream os;
  os << "[reward]\nalpha = " << format_real(c.config.alpha) << "\nbeta = " << format_real(c.config.beta)
     << "\ntheta_t = " << format_real(c.config.theta_t) << "\ntheta_z = " << format_real(c.config.theta_z) << "\n\n";
  os << "[achieved]\nwr = " << format_real(c.wr) << "\nrr = " << format_real(c.rr) << "\nsamples = " << c.samples
     << "\ndraws = " << c.draws << "\n";
  return os.str();
}

inline reward::CalibrationResult reward_from_toml(std::string_view text, const std::string& source) {
  const auto root = parse_text(text, source);
  reward::CalibrationResult c;
  detail::Reader top(root, "");
  top.table("reward");
  top.table("achieved");
  top.reject_unknown();
  detail::Reader r(detail::sub_table(root, "reward"), "reward");
  r.number("alpha", c.config.alpha);
  r.number("beta", c.config.beta);
  r.number("theta_t", c.config.theta_t);
  if (!r.optional_number("theta_z", c.config.theta_z)) throw ConfigError(source + ": reward.theta_z missing");
  r.reject_unknown();
  detail::Reader a(detail::sub_table(root, "achieved"), "achieved");
  a.number("wr", c.wr);
  a.number("rr", c.rr);
  a.number("samples", c.samples);
  a.number("draws", c.draws);
  a.reject_unknown();
  try {
    c.config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace fastergts::config
