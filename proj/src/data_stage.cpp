#include "figsynth/data_stage.hpp"

#include <sstream>

#include "figsynth/assets.hpp"
#include "figsynth/errors.hpp"

namespace figsynth {

using nlohmann::json;

const FewshotStore& FewshotStore::builtin() {
  static const FewshotStore store = [] {
    FewshotStore s;
    for (ChartType type : kAllChartTypes) {
      const std::string name = "fewshot/" + std::string(chart_type_name(type)) + ".json";
      const std::string_view raw = embedded_asset(name);
      if (raw.empty()) continue;
      const json j = json::parse(raw);
      const FewshotStore parsed = FewshotStore::from_json(j);
      for (const auto& item : parsed.exemplars(type)) s.add(item);
    }
    return s;
  }();
  return store;
}

FewshotStore FewshotStore::from_json(const json& j) {
  if (!j.is_array()) throw ParseFailure("few-shot store must be a JSON array");
  FewshotStore store;
  for (const auto& item : j) store.add(chart_data_from_json(item));
  return store;
}

void FewshotStore::add(ChartData exemplar) {
  by_type_[exemplar.chart_type].push_back(std::move(exemplar));
}

const std::vector<ChartData>& FewshotStore::exemplars(ChartType type) const {
  static const std::vector<ChartData> empty;
  auto it = by_type_.find(type);
  return it == by_type_.end() ? empty : it->second;
}

std::vector<ChartData> select_fewshot(const FewshotStore& store, ChartType type, Rng& rng) {
  const auto& pool = store.exemplars(type);
  if (pool.size() < kFewshotPerPrompt) {
    throw StoreMissing("need at least 2 exemplars for " + std::string(chart_type_name(type)));
  }
  std::vector<ChartData> out;
  for (std::size_t idx : rng.sample_indices(pool.size(), kFewshotPerPrompt)) {
    out.push_back(pool[idx]);
  }
  return out;
}

ChatRequest build_data_prompt(const std::string& topic, ChartType type,
                              std::span<const ChartData> exemplars) {
  const std::string type_name(chart_type_name(type));
  ChatRequest req;
  req.system =
      "You generate the data content of a chart as one JSON object. Use the same keys and "
      "structure as the examples. Colors are #RRGGBB strings.\n" +
      stage_marker(StageTag::Data) + "\n#chart-type:" + type_name;
  std::ostringstream user;
  user << "Chart type: " << type_name << ". " << chart_type_description(type) << "\n\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    user << "Example " << (i + 1) << ":\n```json\n" << canonical_json(exemplars[i]) << "\n```\n\n";
  }
  user << "Topic: " << topic << "\n"
       << "Write the JSON object for this topic with keys title, x_label, y_label and series. "
          "Each series has a name, a color and points; each point has a label (or a numeric x) "
          "and a value. Choose a plausible number of points and a realistic trend.";
  req.user = user.str();
  req.temperature = 0.7;
  req.max_tokens = 1500;
  return req;
}

DataGenOutcome generate_chart_data(const std::string& topic, ChartType type, Gateway& gateway,
                                   Rng& rng, int max_attempts, const FewshotStore& store) {
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  DataGenOutcome outcome;
  while (outcome.attempts < max_attempts) {
    ++outcome.attempts;
    const auto exemplars = select_fewshot(store, type, rng);
    const ChatResponse resp = gateway.complete(build_data_prompt(topic, type, exemplars));
    ChartData data;
    try {
      data = parse_chart_data(resp.text, type, topic);
    } catch (const ParseFailure& e) {
      outcome.last_violations = ValidationReport{{{"$", "parse-failure", e.what()}}};
      continue;
    }
    ValidationReport report = validate_chart_data(data);
    if (report.ok()) {
      outcome.status = GenStatus::Ok;
      outcome.data = std::move(data);
      outcome.last_violations.reset();
      return outcome;
    }
    outcome.last_violations = std::move(report);
  }
  outcome.status = GenStatus::Rejected;
  return outcome;
}

json to_json(const DataGenOutcome& outcome) {
  json violations = json::array();
  if (outcome.last_violations) {
    for (const auto& v : outcome.last_violations->violations) {
      violations.push_back({{"path", v.path}, {"rule", v.rule}, {"message", v.message}});
    }
  }
  return {{"status", outcome.status == GenStatus::Ok ? "ok" : "rejected"},
          {"attempts", outcome.attempts},
          {"violations", std::move(violations)}};
}

}  // namespace figsynth
