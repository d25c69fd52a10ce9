#include "figsynth/qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "figsynth/assets.hpp"
#include "figsynth/color.hpp"
#include "figsynth/errors.hpp"
#include "figsynth/eval.hpp"

namespace figsynth {

using nlohmann::json;

namespace {

using T = ChartType;

const std::vector<T> kSingle = {T::VBar, T::HBar, T::DivergingBar, T::Pie};
const std::vector<T> kMultiBars = {T::VGroupedBar, T::HGroupedBar, T::VStackedBar,
                                   T::HStackedBar};
const std::vector<T> kMultiBarsLine = {T::VGroupedBar, T::HGroupedBar, T::VStackedBar,
                                       T::HStackedBar, T::Line};
const std::vector<T> kMultiAll = {T::VGroupedBar, T::HGroupedBar, T::VStackedBar,
                                  T::HStackedBar, T::Line,        T::Scatter};
const std::vector<T> kCategorical = {T::VBar,        T::HBar,        T::DivergingBar,
                                     T::VGroupedBar, T::HGroupedBar, T::VStackedBar,
                                     T::HStackedBar, T::Line,        T::Pie};
const std::vector<T> kAxes = {T::VBar,        T::HBar,        T::DivergingBar, T::VGroupedBar,
                              T::HGroupedBar, T::VStackedBar, T::HStackedBar,  T::Line,
                              T::Scatter};

using C = QaCategory;

const std::vector<QATemplate>& templates() {
  static const std::vector<QATemplate> all = {
      {1, C::Structure, kCategorical, "How many categories are shown in the chart?",
       "count-categories"},
      {2, C::Structure, kMultiAll, "How many series are shown in the chart?", "count-series"},
      {3, C::Structure, {T::Line, T::Scatter},
       "How many data points are plotted in the {series} series?", "count-points"},
      {4, C::Structure, kAxes, "What is the label of the value axis?", "value-axis-label"},
      {5, C::Retrieval, kSingle, "What is the value of {label}?", "value-of-label"},
      {6, C::Retrieval, kMultiBarsLine, "What is the value of {series} for {label}?",
       "value-of-series-label"},
      {7, C::Retrieval, {T::Line, T::Scatter},
       "What is the y-value of the {series} point at x = {x}?", "y-at-x"},
      {8, C::Retrieval, {T::Pie}, "What percentage of the total does {label} account for?",
       "percent-of-total"},
      {9, C::Extremum, kSingle, "Which category has the highest value?", "argmax-label"},
      {10, C::Extremum, kSingle, "Which category has the lowest value?", "argmin-label"},
      {11, C::Extremum, kSingle, "What is the highest value shown in the chart?", "max-value"},
      {12, C::Extremum, kMultiBarsLine, "In the {series} series, which category has the highest value?",
       "argmax-label-in-series"},
      {13, C::Extremum, kMultiBarsLine, "Which series has the highest value for {label}?",
       "argmax-series-at-label"},
      {14, C::Extremum, kMultiAll, "What is the maximum value of the {series} series?",
       "max-of-series"},
      {15, C::Extremum, kMultiBars, "Which category has the largest total across all series?",
       "argmax-category-total"},
      {16, C::Comparison, kSingle, "Is the value of {label} greater than the value of {label2}?",
       "greater-label"},
      {17, C::Comparison, kMultiBarsLine, "Is {series} greater than {series2} for {label}?",
       "greater-series-at-label"},
      {18, C::Comparison, kMultiAll,
       "Does the {series} series have a higher average than the {series2} series?",
       "higher-series-average"},
      {19, C::Comparison, {T::DivergingBar}, "How many categories have a negative value?",
       "count-negative"},
      {20, C::Arithmetic, kSingle, "What is the sum of all values?", "sum-all"},
      {21, C::Arithmetic, kSingle, "What is the difference between {label} and {label2}?",
       "abs-difference"},
      {22, C::Arithmetic, kSingle, "What is the average value across all categories?", "mean-all"},
      {23, C::Arithmetic, kSingle, "What is the ratio of {label} to {label2}?", "ratio"},
      {24, C::Arithmetic, kMultiBarsLine, "What is the total of {label} across all series?",
       "total-at-label"},
      {25, C::Arithmetic, kMultiAll, "What is the average of the {series} series?",
       "mean-of-series"},
      {26, C::Color, std::vector<T>(kAllChartTypes.begin(), kAllChartTypes.end()),
       "What color is used to represent {item}?", "color-of"},
  };
  return all;
}

bool has_type(const QATemplate& t, ChartType type) {
  return std::find(t.applicable_types.begin(), t.applicable_types.end(), type) !=
         t.applicable_types.end();
}

bool pattern_has(const QATemplate& t, std::string_view slot) {
  return t.question_pattern.find(slot) != std::string::npos;
}

const Series* find_series(const ChartData& data, std::string_view name) {
  for (const auto& s : data.series) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const DataPoint* find_point(const Series& s, std::string_view key) {
  for (const auto& p : s.points) {
    if (point_key(p) == key) return &p;
  }
  return nullptr;
}

const Series& require_series(const ChartData& data, std::string_view name) {
  const Series* s = find_series(data, name);
  if (!s) throw UnboundReference("no series named '" + std::string(name) + "'");
  return *s;
}

double require_value(const Series& s, std::string_view key) {
  const DataPoint* p = find_point(s, key);
  if (!p) {
    throw UnboundReference("series '" + s.name + "' has no point '" + std::string(key) + "'");
  }
  return p->value;
}

double series_sum(const Series& s) {
  double total = 0.0;
  for (const auto& p : s.points) total += p.value;
  return total;
}

double series_mean(const Series& s) {
  return s.points.empty() ? 0.0 : series_sum(s) / static_cast<double>(s.points.size());
}

std::string count_text(std::size_t n) { return std::to_string(n); }

std::string yes_no(bool b) { return b ? "Yes" : "No"; }

std::size_t count_x(const Series& s, std::string_view key) {
  return static_cast<std::size_t>(std::count_if(
      s.points.begin(), s.points.end(), [&](const DataPoint& p) { return point_key(p) == key; }));
}

// Per-template requirements beyond the chart type.
bool data_supports(const QATemplate& t, const ChartData& data) {
  if (data.series.empty()) return false;
  const bool labels = uses_labels(data);
  switch (t.id) {
    case 1:
    case 6:
    case 12:
    case 24:
      return labels;
    case 13:
    case 17:
      return labels && data.series.size() >= 2;
    case 18:
      return data.series.size() >= 2;
    case 4:
      return !data.y_label.empty();
    case 7:
      return !labels;
    default:
      return true;
  }
}

bool binding_valid(const QATemplate& t, const ChartData& data, const Bindings& b) {
  const Series* s = pattern_has(t, "{series}") ? find_series(data, b.series) : nullptr;
  if (pattern_has(t, "{series}") && !s) return false;
  if (pattern_has(t, "{series2}")) {
    if (!find_series(data, b.series2) || b.series2 == b.series) return false;
  }
  const Series& first = data.series.front();
  switch (t.id) {
    case 5:
    case 8:
      return find_point(first, b.label) != nullptr;
    case 16:
    case 21:
      return b.label != b.label2 && find_point(first, b.label) && find_point(first, b.label2);
    case 23: {
      if (b.label == b.label2) return false;
      const DataPoint* num = find_point(first, b.label);
      const DataPoint* den = find_point(first, b.label2);
      return num && den && den->value != 0.0;
    }
    case 6:
      return find_point(*s, b.label) != nullptr;
    case 7:
      return count_x(*s, b.x) == 1;
    case 13:
    case 24:
      return std::any_of(data.series.begin(), data.series.end(),
                         [&](const Series& x) { return find_point(x, b.label) != nullptr; });
    case 17:
      return find_point(*s, b.label) && find_point(*find_series(data, b.series2), b.label);
    case 26:
      if (data.chart_type == ChartType::Pie) return find_point(first, b.item) != nullptr;
      return find_series(data, b.item) != nullptr;
    default:
      return true;
  }
}

std::vector<std::string> series_names(const ChartData& data) {
  std::vector<std::string> out;
  for (const auto& s : data.series) out.push_back(s.name);
  return out;
}

std::vector<std::string> slot_candidates(const QATemplate& t, const ChartData& data,
                                         std::string_view slot) {
  if (slot == "series" || slot == "series2") return series_names(data);
  if (slot == "label" || slot == "label2" || slot == "x") return category_keys(data);
  if (slot == "item") {
    if (data.chart_type == ChartType::Pie) {
      std::vector<std::string> out;
      for (const auto& p : data.series.front().points) out.push_back(point_key(p));
      return out;
    }
    return series_names(data);
  }
  (void)t;
  return {};
}

// Pattern split into alternating literal text and slot names.
struct PatternPart {
  bool is_slot;
  std::string text;
};

std::vector<PatternPart> split_pattern(const std::string& pattern) {
  std::vector<PatternPart> parts;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string::npos) {
      parts.push_back({false, pattern.substr(pos)});
      break;
    }
    if (open > pos) parts.push_back({false, pattern.substr(pos, open - pos)});
    const auto close = pattern.find('}', open);
    parts.push_back({true, pattern.substr(open + 1, close - open - 1)});
    pos = close + 1;
  }
  return parts;
}

std::string* slot_ref(Bindings& b, std::string_view slot) {
  if (slot == "series") return &b.series;
  if (slot == "series2") return &b.series2;
  if (slot == "label") return &b.label;
  if (slot == "label2") return &b.label2;
  if (slot == "x") return &b.x;
  if (slot == "item") return &b.item;
  return nullptr;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Lowercase and whitespace-collapsed, ending in exactly one '?'.
std::string normalize_question(std::string_view q) {
  std::string s = lower(normalize_answer(q));
  while (!s.empty() && (s.back() == '?' || s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s + "?";
}

void match_parts(const std::vector<PatternPart>& parts, std::size_t idx, const std::string& q,
                 std::size_t pos, const QATemplate& t, const ChartData& data, Bindings& current,
                 std::vector<Bindings>& out) {
  if (idx == parts.size()) {
    if (pos == q.size()) out.push_back(current);
    return;
  }
  const PatternPart& part = parts[idx];
  if (!part.is_slot) {
    const std::string literal = lower(part.text);
    if (q.compare(pos, literal.size(), literal) != 0) return;
    match_parts(parts, idx + 1, q, pos + literal.size(), t, data, current, out);
    return;
  }
  std::string* ref = slot_ref(current, part.text);
  for (const std::string& candidate : slot_candidates(t, data, part.text)) {
    const std::string norm = lower(normalize_answer(candidate));
    if (norm.empty() || q.compare(pos, norm.size(), norm) != 0) continue;
    *ref = candidate;
    match_parts(parts, idx + 1, q, pos + norm.size(), t, data, current, out);
  }
  ref->clear();
}

// Sums of two-decimal values pick up rounding noise depending on the order
// of addition; differences below this are ties.
bool clearly_greater(double a, double b) {
  return a - b > 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

std::size_t argmax_first(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (clearly_greater(values[i], values[best])) best = i;
  }
  return best;
}

std::size_t argmin_first(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (clearly_greater(values[best], values[i])) best = i;
  }
  return best;
}

std::vector<double> values_of(const Series& s) {
  std::vector<double> v;
  for (const auto& p : s.points) v.push_back(p.value);
  return v;
}

std::string color_word(const std::string& hex) {
  const auto rgb = parse_hex_color(hex);
  if (!rgb) throw NotApplicable("color '" + hex + "' is not #RRGGBB");
  return std::string(nearest_color_name(*rgb));
}

std::map<ChartType, std::vector<QaExemplar>> load_exemplar_bank() {
  std::map<ChartType, std::vector<QaExemplar>> bank;
  const std::string_view raw = embedded_asset("qa_exemplars.json");
  const json j = json::parse(raw, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return bank;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto type = chart_type_from_name(it.key());
    if (!type || !it.value().is_array()) continue;
    for (const auto& e : it.value()) {
      bank[*type].push_back({e.value("question", ""), e.value("answer", ""),
                             e.value("qa_type", "")});
    }
  }
  return bank;
}

}  // namespace

std::string_view qa_category_name(QaCategory category) {
  switch (category) {
    case QaCategory::Structure:
      return "structure";
    case QaCategory::Retrieval:
      return "retrieval";
    case QaCategory::Extremum:
      return "extremum";
    case QaCategory::Comparison:
      return "comparison";
    case QaCategory::Arithmetic:
      return "arithmetic";
    case QaCategory::Color:
      return "color";
  }
  return "structure";
}

std::string_view qa_source_name(QaSource source) {
  return source == QaSource::Template ? "template" : "llm";
}

std::span<const QATemplate> qa_templates() { return templates(); }

const QATemplate& qa_template(int id) {
  const auto& all = templates();
  if (id < 1 || id > static_cast<int>(all.size())) {
    throw NotApplicable("no QA template with id " + std::to_string(id));
  }
  return all[static_cast<std::size_t>(id - 1)];
}

json to_json(const QAPair& qa) {
  return {{"figure_id", qa.figure_id}, {"question", qa.question},
          {"answer", qa.answer},       {"qa_type", qa.qa_type},
          {"source", std::string(qa_source_name(qa.source))},
          {"verified", qa.verified}};
}

QAPair qa_pair_from_json(const json& j) {
  try {
    QAPair qa;
    qa.figure_id = j.value("figure_id", "");
    qa.question = j.at("question").get<std::string>();
    qa.answer = j.at("answer").get<std::string>();
    qa.qa_type = j.value("qa_type", "");
    const std::string source = j.value("source", "template");
    if (source == "template") {
      qa.source = QaSource::Template;
    } else if (source == "llm") {
      qa.source = QaSource::Llm;
    } else {
      throw ParseFailure("unknown QA source '" + source + "'");
    }
    qa.verified = j.value("verified", false);
    return qa;
  } catch (const json::exception& e) {
    throw ParseFailure(std::string("bad QA record: ") + e.what());
  }
}

bool template_applicable(const QATemplate& tmpl, const ChartData& data) {
  return has_type(tmpl, data.chart_type) && data_supports(tmpl, data);
}

std::vector<Bindings> candidate_bindings(const QATemplate& tmpl, const ChartData& data) {
  if (!template_applicable(tmpl, data)) return {};
  std::vector<std::string> slots;
  for (const auto& part : split_pattern(tmpl.question_pattern)) {
    if (part.is_slot) slots.push_back(part.text);
  }
  std::vector<Bindings> out;
  Bindings current;
  std::function<void(std::size_t)> expand = [&](std::size_t i) {
    if (i == slots.size()) {
      if (binding_valid(tmpl, data, current)) out.push_back(current);
      return;
    }
    for (const auto& value : slot_candidates(tmpl, data, slots[i])) {
      *slot_ref(current, slots[i]) = value;
      expand(i + 1);
    }
    slot_ref(current, slots[i])->clear();
  };
  expand(0);
  return out;
}

std::string fill_pattern(const QATemplate& tmpl, const Bindings& bindings) {
  std::string out;
  Bindings b = bindings;
  for (const auto& part : split_pattern(tmpl.question_pattern)) {
    out += part.is_slot ? *slot_ref(b, part.text) : part.text;
  }
  return out;
}

std::string oracle_answer(const ChartData& data, const QATemplate& tmpl, const Bindings& b) {
  if (!has_type(tmpl, data.chart_type)) {
    throw NotApplicable("template " + std::to_string(tmpl.id) + " does not apply to " +
                        std::string(chart_type_name(data.chart_type)));
  }
  if (!data_supports(tmpl, data)) {
    throw NotApplicable("template " + std::to_string(tmpl.id) + " needs data this chart lacks");
  }
  const Series& first = data.series.front();
  const std::string& rule = tmpl.answer_rule;

  if (rule == "count-categories") return count_text(category_keys(data).size());
  if (rule == "count-series") return count_text(data.series.size());
  if (rule == "count-points") return count_text(require_series(data, b.series).points.size());
  if (rule == "value-axis-label") return data.y_label;
  if (rule == "value-of-label") return format_answer_number(require_value(first, b.label));
  if (rule == "value-of-series-label") {
    return format_answer_number(require_value(require_series(data, b.series), b.label));
  }
  if (rule == "y-at-x") {
    const Series& s = require_series(data, b.series);
    if (count_x(s, b.x) != 1) throw UnboundReference("x = " + b.x + " is not unique in series");
    return format_answer_number(require_value(s, b.x));
  }
  if (rule == "percent-of-total") {
    const double total = series_sum(first);
    if (total == 0.0) throw NotApplicable("total is zero");
    return format_answer_number(100.0 * require_value(first, b.label) / total);
  }
  if (rule == "argmax-label") return point_key(first.points[argmax_first(values_of(first))]);
  if (rule == "argmin-label") return point_key(first.points[argmin_first(values_of(first))]);
  if (rule == "max-value") {
    return format_answer_number(first.points[argmax_first(values_of(first))].value);
  }
  if (rule == "argmax-label-in-series") {
    const Series& s = require_series(data, b.series);
    return point_key(s.points[argmax_first(values_of(s))]);
  }
  if (rule == "argmax-series-at-label") {
    const Series* best = nullptr;
    double best_v = 0.0;
    for (const auto& s : data.series) {
      const DataPoint* p = find_point(s, b.label);
      if (p && (!best || p->value > best_v)) {
        best = &s;
        best_v = p->value;
      }
    }
    if (!best) throw UnboundReference("no series has '" + b.label + "'");
    return best->name;
  }
  if (rule == "max-of-series") {
    const Series& s = require_series(data, b.series);
    return format_answer_number(s.points[argmax_first(values_of(s))].value);
  }
  if (rule == "argmax-category-total") {
    const auto keys = category_keys(data);
    std::vector<double> totals;
    for (const auto& key : keys) {
      double t = 0.0;
      for (const auto& s : data.series) {
        if (const DataPoint* p = find_point(s, key)) t += p->value;
      }
      totals.push_back(t);
    }
    return keys[argmax_first(totals)];
  }
  if (rule == "greater-label") {
    if (b.label == b.label2) throw UnboundReference("comparison needs two different categories");
    return yes_no(require_value(first, b.label) > require_value(first, b.label2));
  }
  if (rule == "greater-series-at-label") {
    if (b.series == b.series2) throw UnboundReference("comparison needs two different series");
    return yes_no(require_value(require_series(data, b.series), b.label) >
                  require_value(require_series(data, b.series2), b.label));
  }
  if (rule == "higher-series-average") {
    if (b.series == b.series2) throw UnboundReference("comparison needs two different series");
    return yes_no(clearly_greater(series_mean(require_series(data, b.series)),
                                  series_mean(require_series(data, b.series2))));
  }
  if (rule == "count-negative") {
    return count_text(static_cast<std::size_t>(std::count_if(
        first.points.begin(), first.points.end(), [](const DataPoint& p) { return p.value < 0; })));
  }
  if (rule == "sum-all") return format_answer_number(series_sum(first));
  if (rule == "abs-difference") {
    return format_answer_number(
        std::fabs(require_value(first, b.label) - require_value(first, b.label2)));
  }
  if (rule == "mean-all") return format_answer_number(series_mean(first));
  if (rule == "ratio") {
    const double den = require_value(first, b.label2);
    if (den == 0.0) throw NotApplicable("ratio with a zero denominator");
    return format_answer_number(require_value(first, b.label) / den);
  }
  if (rule == "total-at-label") {
    double total = 0.0;
    bool any = false;
    for (const auto& s : data.series) {
      if (const DataPoint* p = find_point(s, b.label)) {
        total += p->value;
        any = true;
      }
    }
    if (!any) throw UnboundReference("no series has '" + b.label + "'");
    return format_answer_number(total);
  }
  if (rule == "mean-of-series") {
    return format_answer_number(series_mean(require_series(data, b.series)));
  }
  if (rule == "color-of") {
    if (data.chart_type == ChartType::Pie) {
      for (std::size_t i = 0; i < first.points.size(); ++i) {
        if (point_key(first.points[i]) == b.item) return color_word(point_fill(first, i));
      }
      throw UnboundReference("no segment named '" + b.item + "'");
    }
    return color_word(require_series(data, b.item).color);
  }
  throw NotApplicable("unknown answer rule '" + rule + "'");
}

std::vector<QAPair> instantiate_templates(const ChartData& data, Rng& rng, std::size_t k) {
  std::vector<const QATemplate*> usable;
  std::vector<std::vector<Bindings>> bindings;
  for (const auto& t : templates()) {
    auto cands = candidate_bindings(t, data);
    if (cands.empty()) continue;
    usable.push_back(&t);
    bindings.push_back(std::move(cands));
  }
  std::vector<QAPair> out;
  for (std::size_t idx : rng.sample_indices(usable.size(), k)) {
    const QATemplate& t = *usable[idx];
    const Bindings& b = bindings[idx][rng.below(bindings[idx].size())];
    QAPair qa;
    qa.question = fill_pattern(t, b);
    qa.answer = oracle_answer(data, t, b);
    qa.qa_type = std::string(qa_category_name(t.category));
    qa.source = QaSource::Template;
    qa.verified = true;
    out.push_back(std::move(qa));
  }
  return out;
}

const std::vector<QaExemplar>& qa_exemplar_bank(ChartType type) {
  static const auto bank = load_exemplar_bank();
  static const std::vector<QaExemplar> empty;
  auto it = bank.find(type);
  return it == bank.end() ? empty : it->second;
}

std::vector<QaExemplar> select_qa_exemplars(ChartType type, Rng& rng) {
  const auto& bank = qa_exemplar_bank(type);
  if (bank.size() < 2) {
    throw StoreMissing("QA exemplar bank for " + std::string(chart_type_name(type)) +
                       " has fewer than 2 entries");
  }
  std::vector<QaExemplar> out;
  for (std::size_t idx : rng.sample_indices(bank.size(), 2)) out.push_back(bank[idx]);
  return out;
}

ChatRequest build_qa_prompt(const ChartData& data, std::span<const QaExemplar> exemplars) {
  ChatRequest req;
  req.system =
      "You write question-answer pairs about a chart, using only the chart's JSON data.\n"
      "Answers must be exact and computable from the data. Give numbers with at most two "
      "decimals and no units. Answer yes/no questions with Yes or No.\n" +
      stage_marker(StageTag::Qa) + "\n#chart-type:" + std::string(chart_type_name(data.chart_type));
  std::ostringstream user;
  user << "Example question-answer pairs for a " << chart_type_name(data.chart_type)
       << " chart:\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const json ex = {{"question", exemplars[i].question}, {"answer", exemplars[i].answer}};
    user << "Example " << (i + 1) << ": " << dump_canonical(ex) << "\n";
  }
  user << "\n" << kQaPromptDataHeader << "\n" << canonical_json(data) << "\n\n"
       << "Write 5 question-answer pairs about this chart covering data extraction, "
          "computation, comparison and color identification.\n"
          "Reply with a JSON list of objects with keys \"question\" and \"answer\" only.";
  req.user = user.str();
  req.temperature = 0.7;
  req.max_tokens = 1024;
  return req;
}

std::vector<QAPair> parse_qa_response(std::string_view raw) {
  auto list = extract_json(raw, '[');
  if (!list || !list->is_array()) throw ParseFailure("no JSON list found in model output");
  std::vector<QAPair> out;
  for (const auto& item : *list) {
    if (!item.is_object()) continue;
    auto q = item.find("question");
    auto a = item.find("answer");
    if (q == item.end() || a == item.end() || !q->is_string()) continue;
    std::string answer;
    if (a->is_string()) {
      answer = a->get<std::string>();
    } else if (a->is_number()) {
      answer = format_answer_number(a->get<double>());
    } else if (a->is_boolean()) {
      answer = a->get<bool>() ? "Yes" : "No";
    } else {
      continue;
    }
    if (q->get<std::string>().empty() || normalize_answer(answer).empty()) continue;
    QAPair qa;
    qa.question = q->get<std::string>();
    qa.answer = std::move(answer);
    qa.qa_type = std::string(kLlmUnclassified);
    qa.source = QaSource::Llm;
    qa.verified = false;
    out.push_back(std::move(qa));
  }
  return out;
}

std::string_view verify_status_name(VerifyStatus status) {
  switch (status) {
    case VerifyStatus::Pass:
      return "pass";
    case VerifyStatus::NumericMismatch:
      return "numeric-mismatch";
    case VerifyStatus::LabelMismatch:
      return "label-mismatch";
    case VerifyStatus::Unanswerable:
      break;
  }
  return "unanswerable";
}

VerifyResult verify_qa(const ChartData& data, const QAPair& qa, double tolerance) {
  VerifyResult result;
  if (data.series.empty()) return result;
  const std::string q = normalize_question(qa.question);
  for (const auto& t : templates()) {
    if (!template_applicable(t, data)) continue;
    std::vector<Bindings> matches;
    Bindings current;
    match_parts(split_pattern(t.question_pattern), 0, q, 0, t, data, current, matches);
    for (const Bindings& b : matches) {
      if (!binding_valid(t, data, b)) continue;
      std::string gold;
      try {
        gold = oracle_answer(data, t, b);
      } catch (const Error&) {
        continue;
      }
      result.oracle_answer = gold;
      result.template_id = t.id;
      const auto gold_num = parse_numeric(gold);
      const bool text_answer = !gold_num || t.category == QaCategory::Color;
      if (relaxed_match(qa.answer, gold, tolerance)) {
        result.status = VerifyStatus::Pass;
      } else {
        result.status = text_answer ? VerifyStatus::LabelMismatch : VerifyStatus::NumericMismatch;
      }
      return result;
    }
  }
  return result;
}

}  // namespace figsynth
