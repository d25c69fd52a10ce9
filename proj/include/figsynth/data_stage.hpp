#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "figsynth/chart_model.hpp"
#include "figsynth/gateway.hpp"
#include "figsynth/rng.hpp"

namespace figsynth {

inline constexpr std::size_t kFewshotPerPrompt = 2;
inline constexpr int kDefaultDataAttempts = 3;

// Hand-written exemplar ChartData per chart type, used as few-shot context.
class FewshotStore {
 public:
  FewshotStore() = default;

  // The exemplars compiled into the library (about ten per chart type).
  static const FewshotStore& builtin();
  // Array of ChartData objects (each with chart_type). Throws ParseFailure.
  static FewshotStore from_json(const nlohmann::json& j);

  void add(ChartData exemplar);
  const std::vector<ChartData>& exemplars(ChartType type) const;

 private:
  std::map<ChartType, std::vector<ChartData>> by_type_;
};

// Two distinct exemplars drawn uniformly. Throws StoreMissing when the type
// has fewer than two.
std::vector<ChartData> select_fewshot(const FewshotStore& store, ChartType type, Rng& rng);

ChatRequest build_data_prompt(const std::string& topic, ChartType type,
                              std::span<const ChartData> exemplars);

enum class GenStatus { Ok, Rejected };

struct DataGenOutcome {
  GenStatus status = GenStatus::Rejected;
  std::optional<ChartData> data;
  int attempts = 0;
  // Violations of the last failed attempt; a parse failure is reported as a
  // single "parse-failure" violation at path "$".
  std::optional<ValidationReport> last_violations;
};

// prompt -> complete -> parse -> validate, with a fresh exemplar sample per
// attempt. Invalid output is rejected, never repaired.
DataGenOutcome generate_chart_data(const std::string& topic, ChartType type, Gateway& gateway,
                                   Rng& rng, int max_attempts = kDefaultDataAttempts,
                                   const FewshotStore& store = FewshotStore::builtin());

nlohmann::json to_json(const DataGenOutcome& outcome);

}  // namespace figsynth
