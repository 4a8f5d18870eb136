// deepgreen: command-line front end for the pipeline stages.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "deepgreen.hpp"

namespace dg = deepgreen;
namespace pl = deepgreen::pipeline;

namespace {

struct StageFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string arm;
  std::string backend;
  bool from_journal = false;
  std::string out;
  std::optional<int> max_inflight;
};

void add_stage_flags(CLI::App* cmd, StageFlags& f, bool with_arm) {
  cmd->add_option("--config", f.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Seed for stochastic steps, overrides the config");
  if (with_arm) cmd->add_option("--arm", f.arm, "Layer B arm")->check(CLI::IsMember({"control", "rag", "context"}));
  cmd->add_option("--backend", f.backend, "Backend id (default: the configured champion)");
  cmd->add_flag("--from-journal", f.from_journal, "Replay LLM answers from the stage's journal instead of calling the backend");
  cmd->add_option("--out", f.out, "Output directory, overrides the config");
  cmd->add_option("--max-inflight", f.max_inflight, "Concurrent requests per backend")->check(CLI::PositiveNumber);
}

int run_stage(const std::string& name, const StageFlags& f, const std::function<void(const pl::PipelineConfig&, const pl::RunOptions&)>& fn) {
  auto cfg = pl::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  pl::RunOptions opt;
  opt.out = f.out.empty() ? cfg.output : std::filesystem::path(f.out);
  opt.backend_id = f.backend;
  if (!f.arm.empty()) opt.arm = dg::judge::parse_arm(f.arm);
  opt.from_journal = f.from_journal;
  opt.max_inflight = f.max_inflight;
  if (!opt.backend_id.empty()) (void)cfg.backend(opt.backend_id);
  fn(cfg, opt);
  std::cout << name << ": done, output in " << opt.out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepgreen: LLM-assisted greenwashing measurement and estimation"};
  app.require_subcommand(1);

  const std::map<std::string, std::function<void(const pl::PipelineConfig&, const pl::RunOptions&)>> stages{
      {"ingest", pl::cmd_ingest},         {"segment", pl::cmd_segment},   {"judge-a", pl::cmd_judge_a},
      {"judge-b", pl::cmd_judge_b},       {"indicators", pl::cmd_indicators}, {"validate", pl::cmd_validate},
      {"estimate", pl::cmd_estimate},     {"placebo", pl::cmd_placebo},   {"report", pl::cmd_report},
      {"run", pl::run_all}};
  const std::map<std::string, std::string> help{
      {"ingest", "Filter the universe and extract environmental sections"},
      {"segment", "Build the unique word sequence S1"},
      {"judge-a", "Layer A: judge S1 words into the green dictionary"},
      {"judge-b", "Layer B: judge keyword-context pairs and count X/Y"},
      {"indicators", "Compute GI and the greenwashing flag"},
      {"validate", "Score backends and ablation arms against labels"},
      {"estimate", "Fit the configured regression models"},
      {"placebo", "Placebo test of the main coefficient"},
      {"report", "Bundle results and manifests"},
      {"run", "Run every stage in order"}};

  StageFlags flags;
  std::map<std::string, CLI::App*> commands;
  for (const auto& [name, _] : stages) {
    auto* cmd = app.add_subcommand(name, help.at(name));
    add_stage_flags(cmd, flags, name == "judge-b" || name == "run");
    commands[name] = cmd;
  }

  dg::synthetic::Options so;
  std::string synth_out, templates = DEEPGREEN_TEMPLATE_DIR;
  bool with_validation = false, without_validation = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus, panel and config with a known answer");
  synth->add_option("--out", synth_out, "Fixture directory")->required();
  synth->add_option("--firms", so.firms, "Firms, including two the universe filter drops")->check(CLI::Range(3, 1000000));
  synth->add_option("--years", so.years, "Years per firm")->check(CLI::Range(1, 50));
  synth->add_option("--seed", so.seed, "Generator seed");
  synth->add_option("--target-ame", so.target_ame, "Designed average marginal effect of the flag");
  synth->add_option("--placebo-replications", so.placebo_replications, "Placebo replications in the written config");
  synth->add_option("--templates", templates, "Directory with layer_a.json and layer_b.json")->check(CLI::ExistingDirectory);
  synth->add_flag("--validation", with_validation, "Write labels and the ablation answers");
  synth->add_flag("--no-validation", without_validation, "Skip labels and the ablation answers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      so.templates = templates;
      if (with_validation) so.validation = true;
      if (without_validation) so.validation = false;
      const auto r = dg::synthetic::generate(so, synth_out);
      std::printf("synth: %zu firm-years, %zu pairs, beta %.6f, designed AME %.6f, output in %s\n", r.rows.size(), r.pairs,
                  r.beta, r.designed_ame, synth_out.c_str());
      return 0;
    }
    for (const auto& [name, cmd] : commands)
      if (cmd->parsed()) return run_stage(name, flags, stages.at(name));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
