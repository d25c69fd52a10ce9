// figsynth command-line entry point.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "figsynth/errors.hpp"
#include "figsynth/pipeline.hpp"

namespace {

using namespace figsynth;
using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 1, kPartial = 2, kGateway = 3 };

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> per_type;
  std::optional<int> parallelism;
  std::optional<std::string> qa_mode;
  std::optional<int> k_template;
  std::optional<bool> randomize_appearance;
  std::optional<double> failure_threshold;
  bool mock = false;
  bool real = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--per-type", o.per_type, "Figures per chart type")->check(CLI::NonNegativeNumber);
  cmd->add_option("--parallelism", o.parallelism, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--qa-mode", o.qa_mode, "template, llm or both")
      ->check(CLI::IsMember({"template", "llm", "both"}));
  cmd->add_option("--k-template", o.k_template, "Template QAs per figure")->check(CLI::PositiveNumber);
  cmd->add_option("--randomize-appearance", o.randomize_appearance, "Sample styles (false: one fixed style)");
  cmd->add_option("--failure-threshold", o.failure_threshold, "Tolerated failure rate")
      ->check(CLI::Range(0.0, 1.0));
  auto* mock = cmd->add_flag("--mock", o.mock, "Use the offline mock backend");
  cmd->add_flag("--real", o.real, "Use the HTTP backend")->excludes(mock);
}

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig cfg = o.config_path.empty() ? PipelineConfig::defaults() : load_pipeline_config(o.config_path);
  if (o.out) cfg.output_dir = *o.out;
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.per_type) {
    for (ChartType t : kAllChartTypes) cfg.counts[t] = *o.per_type;
  }
  if (o.parallelism) cfg.parallelism = *o.parallelism;
  if (o.qa_mode) {
    cfg.qa.mode = *o.qa_mode == "template" ? QaMode::Template : *o.qa_mode == "both" ? QaMode::Both : QaMode::Llm;
  }
  if (o.k_template) cfg.qa.k_template = *o.k_template;
  if (o.randomize_appearance) cfg.randomize_appearance = *o.randomize_appearance;
  if (o.failure_threshold) cfg.failure_threshold = *o.failure_threshold;
  if (o.mock) cfg.gateway.mode = GatewayMode::Mock;
  if (o.real) cfg.gateway.mode = GatewayMode::Real;
  return cfg;
}

std::vector<SplitSpec> parse_splits(const std::string& text) {
  std::vector<SplitSpec> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string part = text.substr(pos, comma - pos);
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("split '" + part + "' is not name=fraction");
    try {
      out.push_back({part.substr(0, eq), std::stod(part.substr(eq + 1))});
    } catch (const std::logic_error&) {
      throw ConfigError("split '" + part + "' has no numeric fraction");
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic chart QA dataset generator"};
  app.require_subcommand(1);
  Overrides overrides;
  app.add_option("-c,--config", overrides.config_path, "Pipeline config file (JSON)")->check(CLI::ExistingFile);

  auto* topics = app.add_subcommand("topics", "Build topic pools for every chart type");
  add_overrides(topics, overrides);
  auto* generate = app.add_subcommand("generate", "Generate data, images and QA pairs");
  add_overrides(generate, overrides);

  auto* stats = app.add_subcommand("stats", "Recompute stats.json from a dataset manifest");
  std::string stats_dir;
  stats->add_option("dataset", stats_dir, "Dataset directory")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions with relaxed accuracy");
  std::string pred_path, gold_path;
  double tolerance = kDefaultTolerance;
  std::size_t max_failures = 20;
  eval->add_option("--pred", pred_path, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--gold", gold_path, "Gold answers JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--tolerance", tolerance, "Relative numeric tolerance")->check(CLI::NonNegativeNumber);
  eval->add_option("--max-failures", max_failures, "Failures listed in the report");

  auto* exp = app.add_subcommand("export-training", "Write training examples as JSONL");
  std::string exp_dir, exp_out, token_name = "chartqa", task_name = "qa", split_text;
  std::uint64_t split_seed = 0;
  exp->add_option("dataset", exp_dir, "Dataset directory")->required();
  exp->add_option("-o,--out", exp_out, "Output JSONL path")->required();
  exp->add_option("--prompt-token", token_name, "chartqa, synthetic_qa or both")
      ->check(CLI::IsMember({"chartqa", "synthetic_qa", "both"}));
  exp->add_option("--task", task_name, "qa or json-parse")->check(CLI::IsMember({"qa", "json-parse"}));
  exp->add_option("--split", split_text, "Stratified splits, e.g. train=0.8,val=0.1,test=0.1");
  exp->add_option("--split-seed", split_seed, "Seed for the split shuffle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (topics->parsed()) {
      const auto cfg = resolve_config(overrides);
      const auto r = cmd_topics(cfg);
      json pools = json::object();
      for (const auto& [t, n] : r.pool_sizes) pools[std::string(chart_type_name(t))] = n;
      json skipped = json::array();
      for (ChartType t : r.skipped) skipped.push_back(chart_type_name(t));
      std::cout << json{{"pools", pools}, {"skipped", skipped}, {"queries", r.queries}}.dump(2) << "\n";
      return kOk;
    }
    if (generate->parsed()) {
      const auto cfg = resolve_config(overrides);
      const auto r = cmd_generate(cfg);
      json summary{{"requested", r.requested},
                   {"produced", r.produced},
                   {"reused", r.reused},
                   {"failed", r.failures.size()},
                   {"failure_rate", r.failure_rate()},
                   {"stats", to_json(r.stats)}};
      std::cout << summary.dump(2) << "\n";
      if (r.over_threshold(cfg.failure_threshold)) {
        std::cerr << "failure rate " << r.failure_rate() << " exceeds threshold " << cfg.failure_threshold
                  << "; see " << (cfg.output_dir / std::string(kRejectionsFile)).string() << "\n";
        return kPartial;
      }
      return kOk;
    }
    if (stats->parsed()) {
      std::cout << to_json(cmd_stats(stats_dir)).dump(2) << "\n";
      return kOk;
    }
    if (eval->parsed()) {
      std::cout << to_json(cmd_eval(pred_path, gold_path, tolerance, max_failures)).dump(2) << "\n";
      return kOk;
    }
    if (exp->parsed()) {
      ExportOptions opts;
      opts.token = *prompt_token_from_name(token_name);
      opts.task = task_name == "json-parse" ? TrainingTask::JsonParse : TrainingTask::Qa;
      if (!split_text.empty()) opts.splits = parse_splits(split_text);
      opts.split_seed = split_seed;
      std::cout << json(cmd_export_training(exp_dir, exp_out, opts)).dump(2) << "\n";
      return kOk;
    }
  } catch (const MissingApiKey& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGateway;
  } catch (const AuthError& e) {
    std::cerr << "error: authentication failed: " << e.what() << "\n";
    return kGateway;
  } catch (const GatewayExhausted& e) {
    std::cerr << "error: gateway: " << e.what() << "\n";
    return kGateway;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
