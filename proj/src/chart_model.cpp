#include "figsynth/chart_model.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "figsynth/color.hpp"
#include "figsynth/errors.hpp"

namespace figsynth {

using nlohmann::json;

namespace {

struct TypeInfo {
  ChartType type;
  std::string_view name;
  std::string_view description;
};

constexpr std::array<TypeInfo, 10> kTypeInfo = {{
    {ChartType::DivergingBar, "diverging-bar",
     "Vertical bar chart with one series whose values diverge around a zero baseline; "
     "it must contain both negative and positive values."},
    {ChartType::VBar, "v-bar", "Vertical bar chart with a single series of 3 to 12 categories."},
    {ChartType::HBar, "h-bar",
     "Horizontal bar chart with a single series of 3 to 12 categories."},
    {ChartType::VGroupedBar, "v-grouped-bar",
     "Vertical grouped bar chart with 2 to 6 series sharing the same category labels."},
    {ChartType::HGroupedBar, "h-grouped-bar",
     "Horizontal grouped bar chart with 2 to 6 series sharing the same category labels."},
    {ChartType::VStackedBar, "v-stacked-bar",
     "Vertical stacked bar chart with 2 to 6 series sharing the same category labels; "
     "all values are non-negative."},
    {ChartType::HStackedBar, "h-stacked-bar",
     "Horizontal stacked bar chart with 2 to 6 series sharing the same category labels; "
     "all values are non-negative."},
    {ChartType::Line, "line", "Line chart with 1 to 5 series over ordered categories."},
    {ChartType::Scatter, "scatter",
     "Scatter plot with 1 to 5 series of numeric (x, value) points."},
    {ChartType::Pie, "pie",
     "Pie chart with one series of 2 to 10 strictly positive segments, each with its own color."},
}};

const TypeInfo& info(ChartType type) {
  for (const auto& entry : kTypeInfo) {
    if (entry.type == type) return entry;
  }
  return kTypeInfo[0];
}

std::string series_path(std::size_t i) { return "series[" + std::to_string(i) + "]"; }

std::string point_path(std::size_t i, std::size_t j) {
  return series_path(i) + ".points[" + std::to_string(j) + "]";
}

const json* find_key(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string text_field(const json& obj, const char* key, bool required, const std::string& ctx) {
  const json* v = find_key(obj, key);
  if (!v) {
    if (required) throw ParseFailure(ctx + ": missing field '" + key + "'");
    return {};
  }
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number()) return format_number(v->get<double>());
  throw ParseFailure(ctx + ": field '" + key + "' is not text");
}

double number_field(const json& v, const std::string& ctx) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str() && *end == '\0') return d;
  }
  throw ParseFailure(ctx + ": expected a number");
}

DataPoint point_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw ParseFailure(ctx + ": point is not an object");
  DataPoint p;
  const json* value = find_key(j, "value");
  if (!value) throw ParseFailure(ctx + ": missing field 'value'");
  p.value = number_field(*value, ctx);
  if (const json* label = find_key(j, "label")) {
    p.label = label->is_string() ? label->get<std::string>() : format_number(number_field(*label, ctx));
  }
  if (const json* x = find_key(j, "x")) p.x = number_field(*x, ctx);
  if (!p.label && !p.x) throw ParseFailure(ctx + ": point needs 'label' or 'x'");
  if (const json* color = find_key(j, "color"); color && color->is_string()) {
    p.color = color->get<std::string>();
  }
  return p;
}

std::vector<Series> series_from_json(const json& j) {
  const json* arr = find_key(j, "series");
  if (!arr || !arr->is_array() || arr->empty()) {
    throw ParseFailure("missing or empty 'series' list");
  }
  std::vector<Series> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const json& s = (*arr)[i];
    const std::string ctx = series_path(i);
    if (!s.is_object()) throw ParseFailure(ctx + ": series is not an object");
    Series series;
    series.name = text_field(s, "name", false, ctx);
    if (series.name.empty()) series.name = "Series " + std::to_string(i + 1);
    series.color = text_field(s, "color", true, ctx);
    const json* points = find_key(s, "points");
    if (!points || !points->is_array()) throw ParseFailure(ctx + ": missing 'points' list");
    for (std::size_t k = 0; k < points->size(); ++k) {
      series.points.push_back(point_from_json((*points)[k], point_path(i, k)));
    }
    out.push_back(std::move(series));
  }
  return out;
}

void dump_into(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::null:
      out += "null";
      break;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
      out += j.dump();
      break;
    case json::value_t::number_float:
      out += format_number(j.get<double>());
      break;
    case json::value_t::string:
      out += j.dump(-1, ' ', false, json::error_handler_t::replace);
      break;
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        dump_into(item, out);
      }
      out += ']';
      break;
    }
    case json::value_t::object: {
      // nlohmann::json objects are std::map-backed, so iteration is key-sorted.
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump(-1, ' ', false, json::error_handler_t::replace);
        out += ':';
        dump_into(it.value(), out);
      }
      out += '}';
      break;
    }
    default:
      out += j.dump();
  }
}

// Index one past the block opened at `start`, or npos when unbalanced.
std::size_t match_block(std::string_view raw, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view chart_type_name(ChartType type) { return info(type).name; }

std::optional<ChartType> chart_type_from_name(std::string_view name) {
  for (const auto& entry : kTypeInfo) {
    if (entry.name == name) return entry.type;
  }
  return std::nullopt;
}

std::string_view chart_type_description(ChartType type) { return info(type).description; }

bool is_horizontal(ChartType type) {
  return type == ChartType::HBar || type == ChartType::HGroupedBar ||
         type == ChartType::HStackedBar;
}

bool is_grouped(ChartType type) {
  return type == ChartType::VGroupedBar || type == ChartType::HGroupedBar;
}

bool is_stacked(ChartType type) {
  return type == ChartType::VStackedBar || type == ChartType::HStackedBar;
}

bool is_single_series_bar(ChartType type) {
  return type == ChartType::VBar || type == ChartType::HBar || type == ChartType::DivergingBar;
}

bool is_multi_series_bar(ChartType type) { return is_grouped(type) || is_stacked(type); }

bool requires_labels(ChartType type) {
  return type != ChartType::Line && type != ChartType::Scatter;
}

std::string point_key(const DataPoint& point) {
  if (point.label) return *point.label;
  if (point.x) return format_number(*point.x);
  return {};
}

std::string point_fill(const Series& series, std::size_t index) {
  if (index < series.points.size() && series.points[index].color) {
    return *series.points[index].color;
  }
  const auto swatches = representative_colors();
  const auto base = parse_hex_color(series.color).value_or(swatches[0].rgb);
  const std::string_view base_name = nearest_color_name(base);
  std::size_t start = 0;
  for (std::size_t i = 0; i < swatches.size(); ++i) {
    if (swatches[i].name == base_name) start = i;
  }
  if (index == 0) return to_hex(base);
  return to_hex(swatches[(start + index) % swatches.size()].rgb);
}

bool uses_labels(const ChartData& data) {
  for (const auto& s : data.series) {
    if (!s.points.empty()) return s.points.front().label.has_value();
  }
  return requires_labels(data.chart_type);
}

std::vector<std::string> category_keys(const ChartData& data) {
  std::vector<std::string> keys;
  std::set<std::string> seen;
  for (const auto& s : data.series) {
    for (const auto& p : s.points) {
      std::string key = point_key(p);
      if (seen.insert(key).second) keys.push_back(std::move(key));
    }
  }
  return keys;
}

bool ValidationReport::has_rule(std::string_view rule) const {
  for (const auto& v : violations) {
    if (v.rule == rule) return true;
  }
  return false;
}

ValidationReport validate_chart_data(const ChartData& data) {
  ValidationReport report;
  auto add = [&](std::string path, std::string rule, std::string message) {
    report.violations.push_back({std::move(path), std::move(rule), std::move(message)});
  };

  const ChartType type = data.chart_type;
  const std::size_t n_series = data.series.size();

  if (type == ChartType::Pie && n_series != 1) {
    add("series", "pie-single-series", "pie charts have exactly one series");
  } else if (type == ChartType::DivergingBar && n_series != 1) {
    add("series", "diverging-single-series", "diverging bar charts have exactly one series");
  } else if ((type == ChartType::VBar || type == ChartType::HBar) && n_series != 1) {
    add("series", "simple-single-series", "simple bar charts have exactly one series");
  } else if (is_multi_series_bar(type) && (n_series < 2 || n_series > 6)) {
    add("series", "series-count", "grouped and stacked bars need 2 to 6 series");
  } else if ((type == ChartType::Line || type == ChartType::Scatter) &&
             (n_series < 1 || n_series > 5)) {
    add("series", "series-count", "line and scatter charts need 1 to 5 series");
  }

  std::set<std::string> names;
  std::optional<bool> chart_label_form;
  for (std::size_t i = 0; i < n_series; ++i) {
    const Series& s = data.series[i];
    if (!names.insert(s.name).second) {
      add(series_path(i) + ".name", "unique-series-names", "duplicate series name '" + s.name + "'");
    }
    if (!parse_hex_color(s.color)) {
      add(series_path(i) + ".color", "color-format", "expected #RRGGBB, got '" + s.color + "'");
    }
    if (s.points.empty() || s.points.size() > 20) {
      add(series_path(i) + ".points", "point-count", "a series holds 1 to 20 points");
    }

    std::optional<bool> label_form;
    std::set<std::string> labels;
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      const DataPoint& p = s.points[j];
      const std::string path = point_path(i, j);
      if (p.label.has_value() == p.x.has_value()) {
        add(path, "point-form", "a point carries exactly one of 'label' or 'x'");
      } else if (!label_form) {
        label_form = p.label.has_value();
      } else if (*label_form != p.label.has_value()) {
        add(path, "point-form-consistent", "points in one series mix labels and x values");
      }
      if (p.label) {
        if (p.label->empty()) add(path + ".label", "label-nonempty", "empty category label");
        if (!labels.insert(*p.label).second) {
          add(path + ".label", "unique-labels", "duplicate category label '" + *p.label + "'");
        }
      } else if (requires_labels(type)) {
        add(path, "categorical-labels", "this chart type needs category labels");
      }
      if (type == ChartType::Scatter && !p.x) {
        add(path, "scatter-numeric-x", "scatter points need a numeric x");
      }
      if (p.x && !std::isfinite(*p.x)) add(path + ".x", "value-finite", "x is not finite");
      if (!std::isfinite(p.value)) {
        add(path + ".value", "value-finite", "value is not finite");
      } else if (type == ChartType::Pie && p.value <= 0) {
        add(path + ".value", "pie-positive", "pie segments must be > 0");
      } else if (is_stacked(type) && p.value < 0) {
        add(path + ".value", "stacked-nonnegative", "stacked values must be >= 0");
      }
      if (p.color && !parse_hex_color(*p.color)) {
        add(path + ".color", "color-format", "expected #RRGGBB, got '" + *p.color + "'");
      }
    }
    if (label_form) {
      if (!chart_label_form) {
        chart_label_form = label_form;
      } else if (*chart_label_form != *label_form) {
        add(series_path(i) + ".points", "series-form-consistent",
            "all series use the same label-vs-x form");
      }
    }
  }

  if (n_series >= 1) {
    const auto& first = data.series.front().points;
    if (type == ChartType::Pie && (first.size() < 2 || first.size() > 10)) {
      add("series[0].points", "pie-segment-count", "pie charts have 2 to 10 segments");
    }
    if ((type == ChartType::VBar || type == ChartType::HBar) &&
        (first.size() < 3 || first.size() > 12)) {
      add("series[0].points", "simple-point-count", "simple bar charts have 3 to 12 bars");
    }
    if (type == ChartType::DivergingBar) {
      bool neg = false, pos = false;
      for (const auto& p : first) {
        neg = neg || p.value < 0;
        pos = pos || p.value > 0;
      }
      if (!neg || !pos) {
        add("series[0].points", "diverging-sign-mix",
            "diverging bars need at least one negative and one positive value");
      }
    }
  }

  if (is_multi_series_bar(type) && n_series >= 2) {
    std::vector<std::string> reference;
    for (const auto& p : data.series[0].points) reference.push_back(point_key(p));
    for (std::size_t i = 1; i < n_series; ++i) {
      std::vector<std::string> keys;
      for (const auto& p : data.series[i].points) keys.push_back(point_key(p));
      if (keys != reference) {
        add(series_path(i) + ".points", "aligned-labels",
            "series must share the label sequence of series[0]");
      }
    }
  }

  return report;
}

ChartData parse_chart_data(std::string_view raw, ChartType chart_type, std::string topic) {
  auto obj = extract_json(raw, '{');
  if (!obj) throw ParseFailure("no JSON object found in model output");
  ChartData data;
  data.chart_type = chart_type;
  data.topic = std::move(topic);
  data.title = text_field(*obj, "title", true, "chart");
  data.x_label = text_field(*obj, "x_label", false, "chart");
  data.y_label = text_field(*obj, "y_label", false, "chart");
  data.series = series_from_json(*obj);
  return data;
}

json to_json(const ChartData& data) {
  json series = json::array();
  for (const auto& s : data.series) {
    json points = json::array();
    for (const auto& p : s.points) {
      json jp = {{"value", p.value}};
      if (p.label) jp["label"] = *p.label;
      if (p.x) jp["x"] = *p.x;
      if (p.color) jp["color"] = *p.color;
      points.push_back(std::move(jp));
    }
    series.push_back({{"name", s.name}, {"color", s.color}, {"points", std::move(points)}});
  }
  return {{"chart_type", std::string(chart_type_name(data.chart_type))},
          {"title", data.title},
          {"x_label", data.x_label},
          {"y_label", data.y_label},
          {"topic", data.topic},
          {"series", std::move(series)}};
}

ChartData chart_data_from_json(const json& j) {
  if (!j.is_object()) throw ParseFailure("chart data is not a JSON object");
  const std::string type_name = text_field(j, "chart_type", true, "chart");
  auto type = chart_type_from_name(type_name);
  if (!type) throw ParseFailure("unknown chart_type '" + type_name + "'");
  ChartData data;
  data.chart_type = *type;
  data.title = text_field(j, "title", true, "chart");
  data.x_label = text_field(j, "x_label", false, "chart");
  data.y_label = text_field(j, "y_label", false, "chart");
  data.topic = text_field(j, "topic", false, "chart");
  data.series = series_from_json(j);
  return data;
}

std::string canonical_json(const ChartData& data) { return dump_canonical(to_json(data)); }

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

double round_to_cents(double value) {
  // The nudge absorbs representation error so decimal ties (1.005) round away
  // from zero as written.
  const double scaled = value * 100.0;
  const double nudge = std::copysign(std::fabs(scaled) * 1e-11 + 1e-9, scaled);
  return std::round(scaled + nudge) / 100.0;
}

std::string format_answer_number(double value) {
  const double r = round_to_cents(value);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string dump_canonical(const json& j) {
  std::string out;
  dump_into(j, out);
  return out;
}

std::optional<json> extract_json(std::string_view raw, char open) {
  for (std::size_t pos = raw.find(open); pos != std::string_view::npos;
       pos = raw.find(open, pos + 1)) {
    const std::size_t end = match_block(raw, pos);
    if (end == std::string_view::npos) continue;
    json parsed = json::parse(raw.substr(pos, end - pos), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded()) return parsed;
  }
  return std::nullopt;
}

}  // namespace figsynth
