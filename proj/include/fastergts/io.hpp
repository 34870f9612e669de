#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastergts/chem.hpp"
#include "fastergts/engine.hpp"
#include "fastergts/reward.hpp"

namespace fastergts::io {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temp file and renames it over `path`, so readers
/// never observe a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

/// Non-empty lines that are not '#' comments, trimmed of surrounding whitespace.
inline std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.front() == '#') continue;
    out.push_back(line);
  }
  return out;
}

struct Corpus {
  std::vector<std::string> valid;
  std::size_t invalid = 0;
};

inline Corpus read_corpus(const fs::path& path) {
  Corpus c;
  for (auto& line : read_lines(path)) {
    if (chem::is_valid(line).valid) c.valid.push_back(std::move(line));
    else ++c.invalid;
  }
  return c;
}

inline constexpr std::size_t kMinCorpusLines = 100;

/// Fits the prior on the valid corpus lines. The base vocabulary is always
/// included so GA children and shortcuts stay encodable.
inline policy::SequencePolicy fit_prior(const Corpus& c, std::size_t order, double smoothing) {
  if (c.valid.size() < kMinCorpusLines) {
    throw IoError("too few valid lines: " + std::to_string(c.valid.size()) + " (need " +
                  std::to_string(kMinCorpusLines) + ")");
  }
  std::vector<std::vector<std::string>> seqs;
  seqs.reserve(c.valid.size());
  for (const auto& s : c.valid) seqs.push_back(policy::smiles_token_texts(s));
  return policy::SequencePolicy::fit(seqs, order, smoothing, policy::base_vocabulary());
}

inline reward::SampleProfile profile_from_json(const nlohmann::json& j) {
  reward::SampleProfile p;
  if (!j.is_object() || !j.contains("id") || !j.contains("features")) throw IoError("profile needs id and features");
  p.id = j.at("id").get<std::string>();
  const auto& f = j.at("features");
  if (!f.is_array() || f.size() != p.features.size()) {
    throw IoError("profile " + p.id + " must have " + std::to_string(p.features.size()) + " features");
  }
  for (std::size_t i = 0; i < p.features.size(); ++i) p.features[i] = f[i].get<double>();
  reward::validate_profile(p);
  return p;
}

inline nlohmann::json profile_to_json(const reward::SampleProfile& p) {
  return {{"id", p.id}, {"features", p.features}};
}

inline std::vector<reward::SampleProfile> read_profiles(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw IoError(path.string() + ": expected a JSON list of profiles");
  std::vector<reward::SampleProfile> out;
  for (const auto& item : j) out.push_back(profile_from_json(item));
  return out;
}

inline reward::Panel read_panel(const fs::path& path, reward::PanelRole role) {
  reward::Panel panel{read_profiles(path), role};
  reward::validate_panel(panel);
  return panel;
}

inline reward::SampleProfile find_profile(const std::vector<reward::SampleProfile>& all, const std::string& id) {
  for (const auto& p : all) {
    if (p.id == id) return p;
  }
  throw IoError("no profile with id " + id);
}

inline policy::SequencePolicy read_policy(const fs::path& path) {
  try {
    return policy::SequencePolicy::from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_policy(const fs::path& path, const policy::SequencePolicy& p) { write_atomic(path, p.to_json().dump() + "\n"); }

/// One JSON object per queue entry, best first.
inline std::string results_jsonl(const engine::RunResult& r) {
  std::string out;
  for (const auto& v : r.ranked) {
    const auto& e = v.entry;
    nlohmann::json j = {{"canonical", e.canonical},
                        {"raw", e.raw},
                        {"reward", e.reward},
                        {"y_t", e.y_t},
                        {"y_z", e.y_z},
                        {"y_z_verify", v.y_z_verify},
                        {"source", std::string(to_string(e.source))},
                        {"iteration", e.iteration},
                        {"panel", r.training_tag},
                        {"verify_panel", r.verification_tag}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string metrics_csv(const std::vector<engine::IterationMetrics>& ms) {
  std::string out = "iteration,n_valid,n_win,wr,rr,best_reward,queue_size\n";
  for (const auto& m : ms) {
    out += std::to_string(m.iteration) + "," + std::to_string(m.n_valid) + "," + std::to_string(m.n_win) + "," +
           format_double(m.wr) + "," + format_double(m.rr) + "," + format_double(m.best_reward) + "," +
           std::to_string(m.queue_size) + "\n";
  }
  return out;
}

struct ResultRow {
  std::string canonical;
  double reward = 0.0;
  double y_t = 0.0;
  double y_z = 0.0;
  double y_z_verify = 0.0;
  std::string source;
  std::size_t iteration = 0;
  std::string panel;
  std::string verify_panel;
};

inline std::vector<ResultRow> read_results(const fs::path& path) {
  std::vector<ResultRow> rows;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    try {
      const auto j = nlohmann::json::parse(line);
      ResultRow r;
      r.canonical = j.at("canonical").get<std::string>();
      r.reward = j.at("reward").get<double>();
      r.y_t = j.at("y_t").get<double>();
      r.y_z = j.at("y_z").get<double>();
      r.y_z_verify = j.at("y_z_verify").get<double>();
      r.source = j.at("source").get<std::string>();
      r.iteration = j.at("iteration").get<std::size_t>();
      r.panel = j.value("panel", "");
      r.verify_panel = j.value("verify_panel", "");
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace fastergts::io
