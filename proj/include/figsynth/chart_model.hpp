#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace figsynth {

enum class ChartType {
  DivergingBar,
  VBar,
  HBar,
  VGroupedBar,
  HGroupedBar,
  VStackedBar,
  HStackedBar,
  Line,
  Scatter,
  Pie,
};

inline constexpr std::array<ChartType, 10> kAllChartTypes = {
    ChartType::DivergingBar, ChartType::VBar,        ChartType::HBar,
    ChartType::VGroupedBar,  ChartType::HGroupedBar, ChartType::VStackedBar,
    ChartType::HStackedBar,  ChartType::Line,        ChartType::Scatter,
    ChartType::Pie,
};

// Wire names: "diverging-bar", "v-bar", ..., "pie".
std::string_view chart_type_name(ChartType type);
std::optional<ChartType> chart_type_from_name(std::string_view name);
// One sentence describing the layout, used in generation prompts.
std::string_view chart_type_description(ChartType type);

bool is_horizontal(ChartType type);
bool is_grouped(ChartType type);
bool is_stacked(ChartType type);
// v-bar, h-bar, diverging-bar.
bool is_single_series_bar(ChartType type);
// Grouped and stacked variants.
bool is_multi_series_bar(ChartType type);
// Every point must carry a category label (all bar types and pie).
bool requires_labels(ChartType type);

struct DataPoint {
  std::optional<std::string> label;
  std::optional<double> x;
  double value = 0.0;
  // Per-point fill, only consulted for pie segments.
  std::optional<std::string> color;

  bool operator==(const DataPoint&) const = default;
};

// Category label, or the canonically formatted x coordinate.
std::string point_key(const DataPoint& point);

struct Series {
  std::string name;
  std::string color;  // "#RRGGBB"
  std::vector<DataPoint> points;

  bool operator==(const Series&) const = default;
};

struct ChartData {
  ChartType chart_type = ChartType::VBar;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::string topic;

  bool operator==(const ChartData&) const = default;
};

// Fill color of point `index`: its own color when set, otherwise a swatch
// rotated from the series color so neighbouring pie segments differ.
std::string point_fill(const Series& series, std::size_t index);

// True when the points are keyed by category labels rather than numeric x.
bool uses_labels(const ChartData& data);
// Union of category keys across series, in first-seen order.
std::vector<std::string> category_keys(const ChartData& data);

struct Violation {
  std::string path;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has_rule(std::string_view rule) const;
};

ValidationReport validate_chart_data(const ChartData& data);

// Extracts the first well-formed JSON object in `raw` (code fences allowed)
// and maps it onto ChartData. The result is not validated. Unknown keys are
// ignored. Throws ParseFailure.
ChartData parse_chart_data(std::string_view raw, ChartType chart_type, std::string topic);

nlohmann::json to_json(const ChartData& data);
// Inverse of to_json; chart_type and topic are read from the object.
ChartData chart_data_from_json(const nlohmann::json& j);

// Byte-stable serialization: sorted keys, numbers via format_number.
std::string canonical_json(const ChartData& data);

// Up to 6 significant digits, trailing zeros dropped ("10", "0.25", "1e+07").
std::string format_number(double value);
// Rounded to 2 decimals, trailing zeros dropped ("60", "12.5", "-0.33").
std::string format_answer_number(double value);
double round_to_cents(double value);

// Compact JSON with object keys sorted and floating point values formatted
// by format_number. Integers print as integers.
std::string dump_canonical(const nlohmann::json& j);

// First balanced {...} (open='{') or [...] (open='[') block in `raw` that
// parses as JSON. Code fences are ignored.
std::optional<nlohmann::json> extract_json(std::string_view raw, char open);

}  // namespace figsynth
