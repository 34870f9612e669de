#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fastergts/config.hpp"
#include "fastergts/io.hpp"
#include "support/cli.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = FASTERGTS_DATA_DIR;

using Result = testsupport::CliResult;
using testsupport::cli;
using testsupport::shell_quote;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fastergts-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) const {
    const auto p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }

  std::string run_args(const std::string& out, const std::string& extra = "") const {
    return "run --config " + shell_quote((kData / "default.toml").string()) + " --out " + shell_quote((dir_ / out).string()) +
           " --set run.budget=200 " + extra;
  }

  fs::path dir_;
};

TEST_F(Cli, ValidateReportsCodeAndPosition) {
  const auto r = cli("validate " + shell_quote(write("bad.smi", "CCO\nC1CC\n").string()));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out, "VALID\nring-unclosed @3\n");
}

TEST_F(Cli, ValidateAllValidAndEmpty) {
  EXPECT_EQ(cli("validate " + shell_quote(write("ok.smi", "CCO\nc1ccccc1\nCC(=O)O\n").string())).code, 0);
  const auto empty = cli("validate " + shell_quote(write("empty.smi", "").string()));
  EXPECT_EQ(empty.code, 0);
  EXPECT_EQ(empty.out, "");
}

TEST_F(Cli, FitPriorOnBundledCorpus) {
  const auto out = dir_ / "prior.json";
  const auto r = cli("fit-prior --corpus " + shell_quote((kData / "toy_corpus.smi").string()) + " --out " + shell_quote(out.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("2000 sequences"), std::string::npos) << r.out;
  EXPECT_NO_THROW(fastergts::io::read_policy(out));
}

TEST_F(Cli, FitPriorRejectsSmallCorpus) {
  std::string lines;
  for (int i = 0; i < 50; ++i) lines += "C" + std::string(static_cast<std::size_t>(i % 7 + 1), 'C') + "O\n";
  const auto r = cli("fit-prior --corpus " + shell_quote(write("small.smi", lines).string()) + " --out " +
                     shell_quote((dir_ / "p.json").string()));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("too few valid lines"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "p.json"));
}

TEST_F(Cli, FitPriorCountsInvalidLines) {
  const auto valid = fastergts::io::read_corpus(kData / "toy_corpus.smi").valid;
  std::string lines;
  for (std::size_t i = 0; i < 180; ++i) lines += valid[i] + "\n";
  for (int i = 0; i < 20; ++i) lines += "C1CC\n";
  const auto r = cli("fit-prior --corpus " + shell_quote(write("mixed.smi", lines).string()) + " --out " +
                     shell_quote((dir_ / "p.json").string()));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("180 sequences, 20 invalid"), std::string::npos) << r.out;
}

TEST_F(Cli, CalibrateOnFixturesRoundTrips) {
  const auto out = dir_ / "reward.toml";
  const auto r = cli("calibrate --config " + shell_quote((kData / "default.toml").string()) + " --out " + shell_quote(out.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto c = fastergts::config::reward_from_toml(fastergts::io::read_text(out), out.string());
  EXPECT_GE(c.wr, 0.01);
  EXPECT_LE(c.wr, 0.05);
  EXPECT_EQ(c.config.theta_t, 1.0);
  EXPECT_EQ(fastergts::config::reward_from_toml(fastergts::config::reward_to_toml(c), "echo").config, c.config);
}

TEST_F(Cli, CalibrateFailsOnFlatOracle) {
  const std::string zeros = "[0, 0, 0, 0, 0, 0, 0, 0]";
  const auto panel = write("flat.json", "[{\"id\": \"a\", \"features\": " + zeros + "}, {\"id\": \"b\", \"features\": " +
                                            zeros + "}]");
  const auto targets = write("t.json", "[{\"id\": \"flat\", \"features\": " + zeros + "}]");
  const auto r = cli("calibrate --config " + shell_quote((kData / "default.toml").string()) + " --panel " +
                     shell_quote(panel.string()) + " --targets " + shell_quote(targets.string()) + " --target flat --out " +
                     shell_quote((dir_ / "r.toml").string()));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("calibration failed"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "r.toml"));
}

TEST_F(Cli, SmokeRunWritesArtifactsQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = cli(run_args("a"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_LT(secs, 10.0);
  EXPECT_NE(r.out.find("total valid samplings"), std::string::npos);
  for (const char* f : {"results.jsonl", "metrics.csv", "config.resolved.toml", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  for (const auto& e : fs::directory_iterator(dir_ / "a")) EXPECT_NE(e.path().extension(), ".tmp");
  const auto summary = nlohmann::json::parse(fastergts::io::read_text(dir_ / "a" / "summary.json"));
  EXPECT_GE(summary.at("total_valid").get<std::size_t>(), 200u);
}

TEST_F(Cli, SameConfigTwiceIsByteIdentical) {
  ASSERT_EQ(cli(run_args("a")).code, 0);
  ASSERT_EQ(cli(run_args("b")).code, 0);
  EXPECT_EQ(fastergts::io::read_text(dir_ / "a" / "results.jsonl"), fastergts::io::read_text(dir_ / "b" / "results.jsonl"));
  EXPECT_EQ(fastergts::io::read_text(dir_ / "a" / "metrics.csv"), fastergts::io::read_text(dir_ / "b" / "metrics.csv"));
}

TEST_F(Cli, ResolvedConfigReproducesRun) {
  ASSERT_EQ(cli(run_args("a")).code, 0);
  const auto r = cli("run --config " + shell_quote((dir_ / "a" / "config.resolved.toml").string()) + " --out " +
                     shell_quote((dir_ / "b").string()));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("calibrate:"), std::string::npos);  // theta_z was echoed, so no recalibration
  EXPECT_EQ(fastergts::io::read_text(dir_ / "a" / "results.jsonl"), fastergts::io::read_text(dir_ / "b" / "results.jsonl"));
}

TEST_F(Cli, AblationFlagReachesEngine) {
  ASSERT_EQ(cli(run_args("a", "--ablation no-ga,no-self-train")).code, 0);
  const auto summary = nlohmann::json::parse(fastergts::io::read_text(dir_ / "a" / "summary.json"));
  EXPECT_EQ(summary.at("ablation"), nlohmann::json({"no-ga", "no-self-train"}));
  EXPECT_EQ(summary.at("shortcut_nodes").get<std::size_t>(), 0u);
  for (const auto& row : fastergts::io::read_results(dir_ / "a" / "results.jsonl")) EXPECT_EQ(row.source, "mcts");
}

TEST_F(Cli, ResultsCarryBothPanelTags) {
  ASSERT_EQ(cli(run_args("a")).code, 0);
  const auto rows = fastergts::io::read_results(dir_ / "a" / "results.jsonl");
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) {
    EXPECT_EQ(row.panel.rfind("training:", 0), 0u);
    EXPECT_EQ(row.verify_panel.rfind("verification:", 0), 0u);
  }
}

TEST_F(Cli, ReportIdenticalFilesGiveIdenticalRows) {
  ASSERT_EQ(cli(run_args("a")).code, 0);
  const auto results = shell_quote((dir_ / "a" / "results.jsonl").string());
  const auto r = cli("report " + results + " " + results + " --corpus " + shell_quote((kData / "toy_corpus.smi").string()));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(r.out);
  std::string header, a, b;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(header, "run,n,mean_reward,mean_y_t,mean_y_z,mean_y_z_verify,uniqueness,novelty");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST_F(Cli, ReportNoveltyZeroForCorpusMolecules) {
  const auto valid = fastergts::io::read_corpus(kData / "toy_corpus.smi").valid;
  std::string lines;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto canonical = fastergts::chem::canonical_form(fastergts::chem::parse_smiles(valid[i]));
    nlohmann::json j = {{"canonical", canonical}, {"raw", valid[i]}, {"reward", 1.0},      {"y_t", 0.0},
                        {"y_z", 0.0},             {"y_z_verify", 0.0}, {"source", "prior"}, {"iteration", 1},
                        {"panel", "training:0"},  {"verify_panel", "verification:1"}};
    lines += j.dump() + "\n";
  }
  const auto r = cli("report " + shell_quote(write("r.jsonl", lines).string()) + " --corpus " +
                     shell_quote((kData / "toy_corpus.smi").string()));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find(",5,1,0,0,0,1,0\n"), std::string::npos) << r.out;
}

TEST_F(Cli, ReportRejectsMisTaggedVerification) {
  nlohmann::json j = {{"canonical", "CCO"}, {"raw", "CCO"},   {"reward", 1.0},     {"y_t", 0.0},
                      {"y_z", 0.0},         {"y_z_verify", 0.0}, {"source", "mcts"}, {"iteration", 1},
                      {"panel", "training:0"}, {"verify_panel", "training:0"}};
  EXPECT_EQ(cli("report " + shell_quote(write("r.jsonl", j.dump() + "\n").string())).code, 1);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli(run_args("a", "--set nope.key=1")).code, 2);
  EXPECT_EQ(cli(run_args("a", "--ablation no-such")).code, 2);
  EXPECT_EQ(cli("run --config " + shell_quote(write("bad.toml", "[run]\nbudget = \"many\"\n").string())).code, 2);
}

TEST(Config, DefaultsRoundTripThroughEcho) {
  const auto a = fastergts::config::load(kData / "default.toml");
  EXPECT_FALSE(a.theta_z_set);
  EXPECT_EQ(a.run.budget, 10000u);
  EXPECT_EQ(a.run.queue_capacity, 1000u);
  const auto tmp = fs::temp_directory_path() / "fastergts-echo.toml";
  std::ofstream(tmp) << fastergts::config::to_toml(a);
  const auto b = fastergts::config::load(tmp);
  fs::remove(tmp);
  EXPECT_EQ(fastergts::config::to_toml(a), fastergts::config::to_toml(b));
}

TEST(Config, SetOverridesAndTypes) {
  const auto c = fastergts::config::load(kData / "default.toml",
                                         {"run.budget=123", "mcts.mix=0.5", "reward.theta_z=-1", "run.ablation=no-ga"});
  EXPECT_EQ(c.run.budget, 123u);
  EXPECT_EQ(c.run.mcts.mix, 0.5);
  EXPECT_TRUE(c.theta_z_set);
  EXPECT_EQ(c.reward.theta_z, -1.0);
  EXPECT_TRUE(c.run.ablation.no_ga);
  EXPECT_THROW(fastergts::config::load(std::nullopt, {"run.budget=-1"}), fastergts::config::ConfigError);
  EXPECT_THROW(fastergts::config::load(std::nullopt, {"mcts.mix=2"}), fastergts::config::ConfigError);
  EXPECT_THROW(fastergts::config::load(std::nullopt, {"ga.population=7"}), fastergts::config::ConfigError);
  EXPECT_THROW(fastergts::config::load(std::nullopt, {"budget"}), fastergts::config::ConfigError);
}

}  // namespace
