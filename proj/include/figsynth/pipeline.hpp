#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figsynth/chart_model.hpp"
#include "figsynth/dataset.hpp"
#include "figsynth/eval.hpp"
#include "figsynth/gateway.hpp"
#include "json.hpp"

namespace figsynth {

enum class QaMode { Template, Llm, Both };
std::string_view qa_mode_name(QaMode mode);

struct QaConfig {
  QaMode mode = QaMode::Llm;
  int k_template = 4;
  bool verify = true;
  bool drop_unverified = false;
};

struct PipelineConfig {
  std::uint64_t master_seed = 0;
  std::map<ChartType, int> counts;  // figures per chart type
  QaConfig qa;
  bool randomize_appearance = true;
  GatewayConfig gateway;
  std::filesystem::path output_dir = "out";
  int parallelism = 4;
  double failure_threshold = 0.01;
  int topic_batch_size = 20;
  int data_max_attempts = 3;

  // 50 figures of every chart type.
  static PipelineConfig defaults();
  int count(ChartType type) const;
  std::size_t total_figures() const;
  // Throws ConfigError (MissingApiKey in real mode without a key).
  void validate() const;
};

// Keys missing from `j` keep their defaults(); "figures_per_type" sets every
// type, "counts" then overrides single types. Throws ConfigError.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Dataset layout under output_dir.
std::filesystem::path topic_pool_path(const std::filesystem::path& root, ChartType type);
std::string image_rel_path(ChartType type, const std::string& figure_id);
std::string data_rel_path(ChartType type, const std::string& figure_id);
std::string appearance_rel_path(ChartType type, const std::string& figure_id);
std::string qa_rel_path(ChartType type, const std::string& figure_id);
inline constexpr std::string_view kManifestFile = "manifest.jsonl";
inline constexpr std::string_view kStatsFile = "stats.json";
inline constexpr std::string_view kRejectionsFile = "rejections.jsonl";
inline constexpr std::string_view kEffectiveConfigFile = "config.json";

struct TopicsResult {
  std::map<ChartType, std::size_t> pool_sizes;
  std::vector<ChartType> skipped;  // pools already large enough
  int queries = 0;
};

// Builds one topic pool file per chart type with a nonzero count. Types whose
// pool already holds enough topics are left alone.
TopicsResult cmd_topics(const PipelineConfig& cfg, std::shared_ptr<ChatBackend> backend = nullptr);

struct FigureFailure {
  std::string figure_id;
  std::string stage;
  std::string message;
};

struct GenerateResult {
  std::size_t requested = 0;
  std::size_t produced = 0;
  std::size_t reused = 0;  // complete figures found on disk
  std::vector<FigureFailure> failures;
  DatasetStats stats;
  double failure_rate() const;
  bool over_threshold(double threshold) const;
};

// data -> render -> qa -> package for every requested figure. Requires the
// topic pools. Per-figure seeds are derive_seed(master_seed, global index,
// stage). Figures whose files already exist are loaded, not regenerated.
// AuthError aborts the run; other per-figure errors are logged and counted.
GenerateResult cmd_generate(const PipelineConfig& cfg, std::shared_ptr<ChatBackend> backend = nullptr);

// Recomputes stats from <dataset>/manifest.jsonl and rewrites stats.json.
// Throws ParseFailure when the manifest has corrupt lines.
DatasetStats cmd_stats(const std::filesystem::path& dataset_dir);

// Predictions and gold answers as JSONL. Rows are joined on "id", else on
// (figure_id, question); files without either are joined by position. The
// answer is read from "answer", "pred"/"prediction" (pred file) or "gold"
// (gold file). Gold rows without a prediction count as wrong.
EvalReport cmd_eval(const std::filesystem::path& pred_path, const std::filesystem::path& gold_path,
                    double tolerance = kDefaultTolerance, std::size_t max_failures = 20);

struct ExportOptions {
  PromptToken token = PromptToken::ChartQa;
  TrainingTask task = TrainingTask::Qa;
  // Written as <stem>.<name><ext> when non-empty.
  std::vector<SplitSpec> splits;
  std::uint64_t split_seed = 0;
};

// Returns the number of examples written per output file.
std::map<std::string, std::size_t> cmd_export_training(const std::filesystem::path& dataset_dir,
                                                       const std::filesystem::path& out_path,
                                                       const ExportOptions& options);

}  // namespace figsynth
