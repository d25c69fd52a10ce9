#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "figsynth/chart_model.hpp"
#include "figsynth/gateway.hpp"
#include "figsynth/rng.hpp"
#include "json.hpp"

namespace figsynth {

enum class QaCategory { Structure, Retrieval, Extremum, Comparison, Arithmetic, Color };

std::string_view qa_category_name(QaCategory category);

// A question pattern with {series}, {series2}, {label}, {label2}, {x} or
// {item} slots, answered by the oracle procedure named in `answer_rule`.
struct QATemplate {
  int id = 0;
  QaCategory category = QaCategory::Structure;
  std::vector<ChartType> applicable_types;
  std::string question_pattern;
  std::string answer_rule;
};

// All 26 templates, ordered by id.
std::span<const QATemplate> qa_templates();
const QATemplate& qa_template(int id);

struct Bindings {
  std::string series;
  std::string series2;
  std::string label;
  std::string label2;
  std::string x;
  std::string item;

  bool operator==(const Bindings&) const = default;
};

enum class QaSource { Template, Llm };
std::string_view qa_source_name(QaSource source);

inline constexpr std::string_view kLlmUnclassified = "llm-unclassified";

struct QAPair {
  std::string question;
  std::string answer;
  std::string qa_type;
  QaSource source = QaSource::Template;
  bool verified = false;
  std::string figure_id;

  bool operator==(const QAPair&) const = default;
};

nlohmann::json to_json(const QAPair& qa);
QAPair qa_pair_from_json(const nlohmann::json& j);

// Template is declared for the chart type and the data has what it needs
// (label form, two series, an axis label...).
bool template_applicable(const QATemplate& tmpl, const ChartData& data);
// Every binding the template accepts for `data`, in a deterministic order.
std::vector<Bindings> candidate_bindings(const QATemplate& tmpl, const ChartData& data);
std::string fill_pattern(const QATemplate& tmpl, const Bindings& bindings);

// Exact answer computed from the data. Numbers use format_answer_number,
// comparisons answer "Yes"/"No", colors answer a base color word.
// Throws NotApplicable or UnboundReference.
std::string oracle_answer(const ChartData& data, const QATemplate& tmpl, const Bindings& bindings);

// k applicable templates sampled without replacement, each with random valid
// bindings and its oracle answer.
std::vector<QAPair> instantiate_templates(const ChartData& data, Rng& rng, std::size_t k);

// Question/answer example shown to the model as formatting context.
struct QaExemplar {
  std::string question;
  std::string answer;
  std::string qa_type;
};

// Per-type bank (about 10 entries each) compiled into the library.
const std::vector<QaExemplar>& qa_exemplar_bank(ChartType type);
// Two distinct exemplars from the bank. Throws StoreMissing when the bank is short.
std::vector<QaExemplar> select_qa_exemplars(ChartType type, Rng& rng);

inline constexpr std::string_view kQaPromptDataHeader = "Chart JSON:";

ChatRequest build_qa_prompt(const ChartData& data, std::span<const QaExemplar> exemplars);

// JSON list of {question, answer} objects. Entries missing either field are
// dropped. Throws ParseFailure when no list can be extracted.
std::vector<QAPair> parse_qa_response(std::string_view raw);

enum class VerifyStatus { Pass, NumericMismatch, LabelMismatch, Unanswerable };
std::string_view verify_status_name(VerifyStatus status);

struct VerifyResult {
  VerifyStatus status = VerifyStatus::Unanswerable;
  std::optional<std::string> oracle_answer;
  int template_id = 0;
};

// Matches the question against the templates; when one matches, recomputes the
// answer and compares (numeric: relative tolerance to the oracle value; text:
// case-insensitive).
VerifyResult verify_qa(const ChartData& data, const QAPair& qa, double tolerance = 0.05);

}  // namespace figsynth
