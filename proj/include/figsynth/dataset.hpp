#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "figsynth/chart_model.hpp"
#include "figsynth/qa.hpp"
#include "figsynth/rng.hpp"
#include "json.hpp"

namespace figsynth {

struct FigureSeeds {
  std::uint64_t topic = 0;
  std::uint64_t data = 0;
  std::uint64_t appearance = 0;
  std::uint64_t qa = 0;

  bool operator==(const FigureSeeds&) const = default;
};

// One figure in the dataset. Paths are relative to the dataset root.
struct FigureRecord {
  std::string figure_id;
  ChartType chart_type = ChartType::VBar;
  std::string topic;
  std::string image_path;
  std::string data_path;
  std::string appearance_path;
  std::vector<QAPair> qa;
  FigureSeeds seeds;
  std::uint64_t content_hash = 0;

  bool operator==(const FigureRecord&) const = default;
};

// "<chart-type>-<6-digit index>", e.g. "v-bar-000042".
std::string make_figure_id(ChartType type, std::size_t index);

std::string hash_hex(std::uint64_t h);

nlohmann::json to_json(const FigureRecord& record);
// Throws ParseFailure.
FigureRecord figure_record_from_json(const nlohmann::json& j);

// JSONL with sorted keys, one record per line, written atomically. Throws
// DuplicateId (before touching the file) or IOFailure.
std::size_t write_manifest(std::span<const FigureRecord> records, const std::filesystem::path& path);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ManifestLoad {
  std::vector<FigureRecord> records;
  std::vector<LineError> errors;
};

// Blank lines are skipped; unparsable lines are reported, not fatal. Throws
// IOFailure when the file cannot be read.
ManifestLoad load_manifest(const std::filesystem::path& path);

struct DatasetStats {
  std::size_t figure_count = 0;
  std::size_t qa_count = 0;
  double qa_per_figure = 0.0;
  std::map<std::string, std::size_t> per_chart_type;
  std::map<std::string, std::size_t> per_qa_type;
  std::size_t llm_qa_count = 0;
  std::size_t llm_qa_verified = 0;
  // Over llm-sourced pairs only; 1.0 when there are none.
  double llm_qa_verification_pass_rate = 1.0;

  bool operator==(const DatasetStats&) const = default;
};

DatasetStats compute_stats(std::span<const FigureRecord> records);
nlohmann::json to_json(const DatasetStats& stats);

struct SplitSpec {
  std::string name;
  double fraction = 0.0;
};

struct NamedSplit {
  std::string name;
  std::vector<FigureRecord> records;
};

// Seeded, stratified by chart type: every type contributes floor or ceil of
// fraction * its count to each split. Records keep their input order within a
// split. Throws BadFractions.
std::vector<NamedSplit> split_dataset(std::span<const FigureRecord> records,
                                      std::span<const SplitSpec> fractions, Rng& rng);

enum class PromptToken { ChartQa, SyntheticQa, Both };
std::string_view prompt_token_name(PromptToken token);
std::optional<PromptToken> prompt_token_from_name(std::string_view name);

inline constexpr std::string_view kChartQaToken = "<chartqa>";
inline constexpr std::string_view kSyntheticQaToken = "<synthetic_qa>";
inline constexpr std::string_view kAnswerToken = "<s_answer>";

// "<chartqa> Q <s_answer>", "<synthetic_qa> Q <s_answer>" or
// "<chartqa> <synthetic_qa> Q <s_answer>".
std::string format_prompt(PromptToken token, std::string_view question);

enum class TrainingTask { Qa, JsonParse };

struct TrainingExample {
  std::string image_path;
  std::string input_text;
  std::string target_text;

  bool operator==(const TrainingExample&) const = default;
};

inline constexpr std::string_view kJsonParseToken = "<json_parse>";

// Qa: one example per QA pair. JsonParse: one per figure, target is the
// canonical ChartData JSON loaded from `root / data_path`.
std::vector<TrainingExample> emit_training_examples(std::span<const FigureRecord> records,
                                                    PromptToken token,
                                                    TrainingTask task = TrainingTask::Qa,
                                                    const std::filesystem::path& root = {});
nlohmann::json to_json(const TrainingExample& example);

// Writes JSONL atomically.
void write_jsonl(const std::vector<nlohmann::json>& rows, const std::filesystem::path& path);

}  // namespace figsynth
