#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fastergts/config.hpp"
#include "fastergts/engine.hpp"
#include "fastergts/io.hpp"

namespace fs = std::filesystem;
using namespace fastergts;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

/// Invalid command-line or config input; exits with the usage code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Inputs {
  policy::SequencePolicy prior;
  reward::SampleProfile target;
  reward::Panel training;
  reward::Panel verification;
};

void require_path(const fs::path& p, const char* key) {
  if (p.empty()) throw UsageError(std::string("missing path: ") + key);
}

policy::SequencePolicy load_prior(const config::ConfigFile& cfg) {
  if (!cfg.paths.prior.empty()) return io::read_policy(cfg.paths.prior);
  require_path(cfg.paths.corpus, "paths.corpus or paths.prior");
  return io::fit_prior(io::read_corpus(cfg.paths.corpus), cfg.policy_order, cfg.policy_smoothing);
}

Inputs load_inputs(const config::ConfigFile& cfg, bool need_verification) {
  require_path(cfg.paths.targets, "paths.targets");
  require_path(cfg.paths.training_panel, "paths.training_panel");
  Inputs in{load_prior(cfg), io::find_profile(io::read_profiles(cfg.paths.targets), cfg.paths.target),
            io::read_panel(cfg.paths.training_panel, reward::PanelRole::training), {}};
  if (need_verification) {
    require_path(cfg.paths.verification_panel, "paths.verification_panel");
    in.verification = io::read_panel(cfg.paths.verification_panel, reward::PanelRole::verification);
  }
  return in;
}

reward::CalibrationResult calibrate(const config::ConfigFile& cfg, const Inputs& in, const reward::ValueOracle& oracle) {
  return reward::calibrate_thresholds(in.prior, in.target, in.training, oracle, cfg.calibration_seed, cfg.calibration);
}

int cmd_fit_prior(const fs::path& corpus_path, std::size_t order, double smoothing, const fs::path& out) {
  if (order == 0 || !(smoothing > 0.0)) throw UsageError("order must be >= 1 and smoothing > 0");
  const auto corpus = io::read_corpus(corpus_path);
  const auto prior = io::fit_prior(corpus, order, smoothing);
  io::write_policy(out, prior);
  std::cout << "fit-prior: " << corpus.valid.size() << " sequences, " << corpus.invalid << " invalid lines skipped, vocabulary "
            << prior.vocabulary().size() << ", order " << order << " -> " << out.string() << "\n";
  return kOk;
}

int cmd_calibrate(const config::ConfigFile& cfg, const fs::path& out) {
  const auto in = load_inputs(cfg, false);
  const reward::SurrogateOracle oracle(cfg.oracle_bias);
  const auto c = calibrate(cfg, in, oracle);
  io::write_atomic(out, config::reward_to_toml(c));
  std::printf("calibrate: theta_t %.6g theta_z %.6g WR %.4f RR %.4f (%zu samples, %zu draws) -> %s\n", c.config.theta_t,
              c.config.theta_z, c.wr, c.rr, c.samples, c.draws, out.string().c_str());
  return kOk;
}

int cmd_run(config::ConfigFile cfg) {
  const auto in = load_inputs(cfg, true);
  const reward::SurrogateOracle oracle(cfg.oracle_bias);
  nlohmann::json calibration = nullptr;
  if (!cfg.theta_z_set) {
    const auto c = calibrate(cfg, in, oracle);
    cfg.reward = c.config;
    cfg.theta_z_set = true;
    calibration = {{"theta_z", c.config.theta_z}, {"wr", c.wr}, {"rr", c.rr}, {"samples", c.samples}, {"draws", c.draws}};
    std::printf("calibrate: theta_z %.6g WR %.4f RR %.4f\n", c.config.theta_z, c.wr, c.rr);
  }
  const auto run_cfg = cfg.run_config();
  const engine::RunInputs ri{&in.prior, &in.target, &in.training, &in.verification, &oracle, cfg.reward};
  const auto r = engine::run(run_cfg, ri);

  const auto& dir = cfg.paths.out_dir;
  io::write_atomic(dir / "results.jsonl", io::results_jsonl(r));
  io::write_atomic(dir / "metrics.csv", io::metrics_csv(r.metrics));
  io::write_atomic(dir / "config.resolved.toml", config::to_toml(cfg));
  const auto top = r.top(run_cfg.top_k);
  double mean_z = 0.0, mean_zv = 0.0;
  for (const auto& v : top) {
    mean_z += v.entry.y_z;
    mean_zv += v.y_z_verify;
  }
  if (!top.empty()) {
    mean_z /= static_cast<double>(top.size());
    mean_zv /= static_cast<double>(top.size());
  }
  nlohmann::json summary = {
      {"seed", run_cfg.seed},
      {"ablation", engine::ablation_names(run_cfg.ablation)},
      {"reward", {{"alpha", cfg.reward.alpha}, {"beta", cfg.reward.beta}, {"theta_t", cfg.reward.theta_t}, {"theta_z", cfg.reward.theta_z}}},
      {"calibration", calibration},
      {"total_valid", r.total_valid},
      {"iterations", r.metrics.size()},
      {"hit_iteration_limit", r.hit_iteration_limit},
      {"queue_size", r.queue.size()},
      {"top_k", run_cfg.top_k},
      {"top1_reward", top.empty() ? 0.0 : top.front().entry.reward},
      {"mean_top_k_reward", r.mean_top_reward(run_cfg.top_k)},
      {"mean_top_k_y_z", mean_z},
      {"mean_top_k_y_z_verify", mean_zv},
      {"initial_wr", r.metrics.front().wr},
      {"final_wr", r.metrics.back().wr},
      {"shortcut_nodes", r.shortcut_nodes},
      {"tree_size", r.tree_size},
      {"panel", r.training_tag},
      {"verify_panel", r.verification_tag}};
  io::write_atomic(dir / "summary.json", summary.dump(2) + "\n");
  std::printf("run: top-1 reward %.6f, total valid samplings %zu (%zu iterations) -> %s\n",
              top.empty() ? 0.0 : top.front().entry.reward, r.total_valid, r.metrics.size(), dir.string().c_str());
  if (r.hit_iteration_limit) std::fprintf(stderr, "warning: stopped at max_iterations before the budget was spent\n");
  return kOk;
}

struct ReportRow {
  std::string run;
  std::size_t n = 0;
  double reward = 0.0, y_t = 0.0, y_z = 0.0, y_z_verify = 0.0, uniqueness = 0.0, novelty = 0.0;
  bool has_novelty = false;
};

int cmd_report(const std::vector<fs::path>& results, const fs::path& corpus_path, std::size_t k, const fs::path& out) {
  if (k == 0) throw UsageError("--top-k must be >= 1");
  std::set<std::string> corpus;
  if (!corpus_path.empty()) {
    for (const auto& s : io::read_corpus(corpus_path).valid) corpus.insert(chem::canonical_form(chem::parse_smiles(s)));
  }
  std::vector<ReportRow> rows;
  for (const auto& path : results) {
    auto entries = io::read_results(path);
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.reward > b.reward; });
    if (entries.size() > k) entries.resize(k);
    ReportRow row;
    row.run = path.string();
    row.n = entries.size();
    std::set<std::string> distinct;
    std::size_t novel = 0;
    for (const auto& e : entries) {
      if (e.verify_panel.rfind("verification:", 0) != 0 || e.panel == e.verify_panel) {
        throw io::IoError(path.string() + ": y_z_verify is not tagged with a held-out verification panel");
      }
      row.reward += e.reward;
      row.y_t += e.y_t;
      row.y_z += e.y_z;
      row.y_z_verify += e.y_z_verify;
      distinct.insert(e.canonical);
      novel += corpus.count(e.canonical) == 0;
    }
    if (row.n > 0) {
      const double n = static_cast<double>(row.n);
      row.reward /= n;
      row.y_t /= n;
      row.y_z /= n;
      row.y_z_verify /= n;
      row.uniqueness = static_cast<double>(distinct.size()) / n;
      row.novelty = static_cast<double>(novel) / n;
    }
    row.has_novelty = !corpus_path.empty();
    rows.push_back(row);
  }
  std::string csv = "run,n,mean_reward,mean_y_t,mean_y_z,mean_y_z_verify,uniqueness,novelty\n";
  for (const auto& r : rows) {
    csv += r.run + "," + std::to_string(r.n) + "," + io::format_double(r.reward) + "," + io::format_double(r.y_t) + "," +
           io::format_double(r.y_z) + "," + io::format_double(r.y_z_verify) + "," + io::format_double(r.uniqueness) + "," +
           (r.has_novelty ? io::format_double(r.novelty) : "") + "\n";
  }
  if (!out.empty()) io::write_atomic(out, csv);
  std::cout << csv;
  return kOk;
}

int cmd_validate(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  bool all_valid = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto rep = chem::is_valid(line);
    if (rep.valid) {
      std::cout << "VALID\n";
    } else {
      all_valid = false;
      std::cout << chem::to_string(rep.error->code) << " @" << rep.error->position << "\n";
    }
  }
  return all_valid ? kOk : kDomainFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FasterGTS: tree search plus genetic algorithm for profile-specific molecule generation"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit-prior", "Fit the n-gram prior policy on a SMILES corpus");
  fs::path fit_corpus, fit_out;
  std::size_t fit_order = policy::kDefaultOrder;
  double fit_smoothing = policy::kDefaultSmoothing;
  fit->add_option("--corpus", fit_corpus, "One SMILES per line; '#' lines and blanks ignored")->required();
  fit->add_option("--order", fit_order, "Context length n")->capture_default_str();
  fit->add_option("--smoothing", fit_smoothing, "Additive smoothing k")->capture_default_str();
  fit->add_option("--out", fit_out, "Policy JSON to write")->required();

  std::optional<fs::path> config_path;
  std::vector<std::string> overrides;
  auto add_config_options = [&](CLI::App* sub) {
    sub->add_option_function<std::string>("--config", [&](const std::string& p) { config_path = p; }, "TOML config file");
    sub->add_option("--set", overrides, "Override a config key, e.g. --set run.budget=200")->take_all();
  };

  auto* cal = app.add_subcommand("calibrate", "Calibrate theta_z so the prior's winning rate lands in the band");
  add_config_options(cal);
  fs::path cal_out, cal_policy, cal_panel, cal_targets;
  std::string cal_target;
  cal->add_option("--policy", cal_policy, "Prior policy JSON (overrides paths.prior)");
  cal->add_option("--targets", cal_targets, "Target profile file (overrides paths.targets)");
  cal->add_option("--target", cal_target, "Target profile id (overrides paths.target)");
  cal->add_option("--panel", cal_panel, "Training panel (overrides paths.training_panel)");
  cal->add_option("--out", cal_out, "Reward config TOML to write")->required();

  auto* run = app.add_subcommand("run", "Run the search and write results, metrics and the resolved config");
  add_config_options(run);
  std::string ablation;
  std::optional<Seed> seed;
  std::optional<std::size_t> threads;
  fs::path run_out, reward_file;
  run->add_option("--ablation", ablation, "Comma list of no-ga, no-self-train, no-mcts");
  run->add_option_function<Seed>("--seed", [&](const Seed& s) { seed = s; }, "Run seed");
  run->add_option_function<std::size_t>("--threads", [&](const std::size_t& t) { threads = t; }, "Worker threads");
  run->add_option("--out", run_out, "Output directory (overrides paths.out_dir)");
  run->add_option("--reward", reward_file, "Reward TOML written by calibrate; skips calibration");

  auto* rep = app.add_subcommand("report", "Summarise one or more results files as CSV");
  std::vector<fs::path> rep_results;
  fs::path rep_corpus, rep_out;
  std::size_t rep_k = 10;
  rep->add_option("results", rep_results, "results.jsonl files")->required();
  rep->add_option("--corpus", rep_corpus, "Prior corpus, for the novelty column");
  rep->add_option("--top-k", rep_k, "Entries per run")->capture_default_str();
  rep->add_option("--out", rep_out, "CSV to write (also printed)");

  auto* val = app.add_subcommand("validate", "Check each SMILES line; prints VALID or 'code @position'");
  fs::path val_path;
  val->add_option("file", val_path, "SMILES file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) return cmd_fit_prior(fit_corpus, fit_order, fit_smoothing, fit_out);
    if (*val) return cmd_validate(val_path);
    if (*rep) return cmd_report(rep_results, rep_corpus, rep_k, rep_out);

    auto cfg = config::load(config_path, overrides);
    if (*cal) {
      if (!cal_policy.empty()) cfg.paths.prior = cal_policy;
      if (!cal_targets.empty()) cfg.paths.targets = cal_targets;
      if (!cal_target.empty()) cfg.paths.target = cal_target;
      if (!cal_panel.empty()) cfg.paths.training_panel = cal_panel;
      return cmd_calibrate(cfg, cal_out);
    }
    if (!ablation.empty()) {
      try {
        cfg.run.ablation = engine::parse_ablations(ablation);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (!run_out.empty()) cfg.paths.out_dir = run_out;
    if (!reward_file.empty()) {
      const auto c = config::reward_from_toml(io::read_text(reward_file), reward_file.string());
      cfg.reward = c.config;
      cfg.theta_z_set = true;
    }
    cfg.validate();
    return cmd_run(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}
