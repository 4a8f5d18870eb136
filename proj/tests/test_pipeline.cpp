#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "deepgreen.hpp"
#include "support/cli_run.hpp"

using namespace deepgreen;
namespace fs = std::filesystem;

namespace {

const std::string kCli = DEEPGREEN_CLI;
const fs::path kFixture = fs::path(DEEPGREEN_DATA_DIR) / "fixture";
const std::string kConfig = (kFixture / "config.json").string();

class FixtureRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    work_ = clirun::scratch("pipeline");
    out_ = work_ / "out";
    const auto r = clirun::run(kCli, {"run", "--config", kConfig, "--out", out_.string()}, work_);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(work_); }

  static fs::path work_, out_;
};

fs::path FixtureRun::work_;
fs::path FixtureRun::out_;

TEST_F(FixtureRun, EmitsIndicatorsTablesAndReport) {
  for (const char* f : {"ingest/sections.jsonl", "segment/s1.json", "judge_a/dictionary.json", "judge_b/pairs.jsonl",
                        "judge_b/arm_control/xy.csv", "judge_b/arm_rag/xy.csv", "judge_b/arm_context/xy.csv",
                        "indicators/indicators.csv", "validate/layer_a.json", "validate/ablation.json",
                        "estimate/table_models.txt", "estimate/ame.json", "placebo/report.json", "report/manifests.json",
                        "report/estimate/table_models.txt", "report/indicators/distribution.csv"})
    EXPECT_TRUE(fs::exists(out_ / f)) << f;
  const auto table = io::read_file(out_ / "estimate/table_models.txt");
  EXPECT_NE(table.find("greenwashing"), std::string::npos);
  EXPECT_NE(table.find("Year FE"), std::string::npos);
}

TEST_F(FixtureRun, UniverseFilterDropsFinancialAndStFirms) {
  const auto s = io::read_json(out_ / "ingest/summary.json");
  EXPECT_EQ(s["documents"], 200);
  EXPECT_EQ(s["excluded_by_filter"], 20);
  EXPECT_EQ(s["sections"], 180);
}

// The generator records what it wrote; the pipeline must recover it.
TEST_F(FixtureRun, IndicatorsMatchDesignedCounts) {
  const auto design = csv::Table::read((kFixture / "design.csv").string());
  const auto rows = indicators::load_indicators(out_ / "indicators/indicators.csv");
  ASSERT_EQ(rows.size(), design.size());
  std::map<std::pair<std::string, int>, const indicators::FirmYearIndicator*> by_key;
  for (const auto& r : rows) by_key[{r.firm_id, r.year}] = &r;
  for (std::size_t i = 0; i < design.size(); ++i) {
    const auto* r = by_key.at({design.at(i, "firm_id"), std::stoi(design.at(i, "year"))});
    EXPECT_EQ(r->x, std::stol(design.at(i, "x")));
    EXPECT_EQ(r->y, std::stol(design.at(i, "y")));
    EXPECT_EQ(r->greenwashing, std::stoi(design.at(i, "greenwashing")));
    EXPECT_DOUBLE_EQ(r->gi, indicators::compute_gi(r->x, r->y));
  }
}

TEST_F(FixtureRun, ManifestsCarryProvenanceWithoutTimestamps) {
  const auto m = io::read_json(out_ / "judge_a/manifest.json");
  EXPECT_EQ(m["stage"], "judge_a");
  EXPECT_EQ(m["version"], "0.1.0");
  EXPECT_FALSE(m["config_hash"].get<std::string>().empty());
  EXPECT_EQ(m["seed"], 7);
  EXPECT_TRUE(m["inputs"].contains("segment/s1.json"));
  EXPECT_TRUE(m["inputs"].contains("mock.json"));
  EXPECT_EQ(m["outputs"]["dictionary.json"], hash_hex(io::read_file(out_ / "judge_a/dictionary.json")));
  const auto bundle = io::read_json(out_ / "report/manifests.json");
  for (const char* s : {"ingest", "segment", "judge_a", "judge_b/control", "indicators", "validate", "estimate", "placebo"})
    EXPECT_TRUE(bundle.contains(s)) << s;
  EXPECT_EQ(io::read_file(out_ / "report/manifests.json").find("timestamp"), std::string::npos);
}

TEST_F(FixtureRun, AblationShowsTheConstructedPattern) {
  const auto j = io::read_json(out_ / "validate/ablation.json");
  const auto metrics = csv::Table::read((out_ / "validate/ablation_metrics.csv").string());
  std::map<std::string, double> mcc;
  for (std::size_t r = 0; r < metrics.size(); ++r) mcc[metrics.at(r, "arm")] = std::stod(metrics.at(r, "mcc"));
  EXPECT_GE(mcc["rag"], mcc["control"]);
  EXPECT_LT(mcc["context"], mcc["control"]);
  EXPECT_TRUE(j.contains("sample"));
}

TEST_F(FixtureRun, EstimateRerunIsByteIdentical) {
  const auto before = clirun::tree(out_ / "estimate");
  const auto r = clirun::run(kCli, {"estimate", "--config", kConfig, "--out", out_.string()}, work_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(clirun::tree(out_ / "estimate"), before);
}

TEST_F(FixtureRun, FromJournalReplaysTheLlmStages) {
  const auto replay = work_ / "replay";
  fs::copy(out_, replay, fs::copy_options::recursive);
  for (const auto& args : std::vector<std::vector<std::string>>{{"judge-a"}, {"judge-b", "--arm", "control"}, {"judge-b", "--arm", "rag"}}) {
    auto a = args;
    for (const char* s : {"--config", kConfig.c_str(), "--out", replay.c_str(), "--from-journal"}) a.push_back(s);
    const auto r = clirun::run(kCli, a, work_);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"judge_a/dictionary.json", "judge_a/log.jsonl", "judge_a/journal.jsonl", "judge_b/arm_control/verdicts.jsonl",
                        "judge_b/arm_control/xy.csv", "judge_b/arm_rag/verdicts.jsonl", "judge_b/pairs.jsonl"})
    EXPECT_EQ(io::read_file(replay / f), io::read_file(out_ / f)) << f;
  const auto m = io::read_json(replay / "judge_a/manifest.json");
  EXPECT_TRUE(m["inputs"].contains("judge_a/journal.jsonl"));
}

TEST_F(FixtureRun, BackendFlagSelectsAnotherBackend) {
  const auto alt = work_ / "alt";
  fs::copy(out_, alt, fs::copy_options::recursive);
  const auto r = clirun::run(kCli, {"judge-a", "--config", kConfig, "--out", alt.string(), "--backend", "mock-lite"}, work_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = GreenDictionary::load(alt / "judge_a/dictionary.json");
  EXPECT_FALSE(d.contains("余热回收"));
  EXPECT_TRUE(d.contains("发展战略"));
  EXPECT_EQ(io::read_json(alt / "judge_a/manifest.json")["backend_id"], "mock-lite");
}

TEST(Pipeline, JudgeBBeforeJudgeANamesTheGreenDictionary) {
  const auto work = clirun::scratch("order");
  const auto out = (work / "out").string();
  ASSERT_EQ(clirun::run(kCli, {"ingest", "--config", kConfig, "--out", out}, work).code, 0);
  const auto r = clirun::run(kCli, {"judge-b", "--config", kConfig, "--out", out}, work);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("MissingArtifact: green dictionary"), std::string::npos) << r.err;
  fs::remove_all(work);
}

TEST(Pipeline, StagesNameTheirMissingPredecessor) {
  const auto cfg = pipeline::load_config(kConfig);
  pipeline::RunOptions opt;
  opt.out = clirun::scratch("missing");
  try {
    pipeline::cmd_segment(cfg, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingArtifact);
    EXPECT_NE(std::string(e.what()).find("ingest"), std::string::npos);
  }
  EXPECT_THROW(pipeline::cmd_estimate(cfg, opt), Error);
  fs::remove_all(opt.out);
}

TEST(Pipeline, StochasticStepsRequireASeed) {
  auto j = io::read_json(kConfig);
  j.erase("seed");
  auto cfg = pipeline::parse_config(j, kFixture);
  pipeline::RunOptions opt;
  opt.out = clirun::scratch("seedless");
  fs::create_directories(opt.out / "estimate");
  io::write_file(opt.out / "estimate/panel.csv", io::read_file(kFixture / "panel.csv"));
  try {
    pipeline::cmd_placebo(cfg, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  fs::remove_all(opt.out);
}

TEST(Pipeline, ConfigRejectsMissingPathsAndUnknownBackends) {
  const auto work = clirun::scratch("badconfig");
  auto j = io::read_json(kConfig);
  j["panel"] = "no_such_panel.csv";
  fs::copy(kFixture, work / "fx", fs::copy_options::recursive);
  io::write_file(work / "fx/bad.json", j.dump());
  try {
    pipeline::load_config(work / "fx/bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  const auto r = clirun::run(kCli, {"judge-a", "--config", kConfig, "--out", (work / "o").string(), "--backend", "nope"}, work);
  EXPECT_EQ(r.code, 2);
  fs::remove_all(work);
}

TEST(Pipeline, ConfigHashIgnoresSchedulingOnly) {
  const auto j = io::read_json(kConfig);
  auto k = j;
  k["backends"][0]["max_inflight"] = 100;
  EXPECT_EQ(pipeline::parse_config(j, kFixture).config_hash, pipeline::parse_config(k, kFixture).config_hash);
  k["backends"][0]["max_retries"] = 5;
  EXPECT_NE(pipeline::parse_config(j, kFixture).config_hash, pipeline::parse_config(k, kFixture).config_hash);
}

TEST(Synthetic, SameSeedSameFiles) {
  const auto work = clirun::scratch("synth");
  synthetic::Options o;
  o.firms = 8;
  o.years = 3;
  o.templates = fs::path(DEEPGREEN_DATA_DIR) / "templates";
  const auto a = synthetic::generate(o, work / "a");
  synthetic::generate(o, work / "b");
  EXPECT_TRUE(clirun::differences(work / "a", work / "b").empty());
  EXPECT_EQ(a.rows.size(), 18u);
  EXPECT_NEAR(a.designed_ame, o.target_ame, 1e-9);
  o.seed = 8;
  synthetic::generate(o, work / "c");
  EXPECT_FALSE(clirun::differences(work / "a", work / "c").empty());
  fs::remove_all(work);
}

TEST(Synthetic, CalibratedBetaHitsTheTargetAme) {
  Rng r(3);
  std::vector<double> eta;
  for (int i = 0; i < 1000; ++i) eta.push_back(r.normal(-1.0, 0.8));
  for (double target : {0.01, 0.07, 0.2}) {
    const double b = synthetic::calibrate_beta(eta, target);
    double ame = 0.0;
    for (double e : eta) ame += synthetic::logistic(e + b) - synthetic::logistic(e);
    EXPECT_NEAR(ame / 1000.0, target, 1e-12);
  }
}

}  // namespace
