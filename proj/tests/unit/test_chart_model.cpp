#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "figsynth/chart_model.hpp"
#include "figsynth/color.hpp"
#include "figsynth/data_stage.hpp"
#include "figsynth/errors.hpp"
#include "test_support.hpp"

namespace figsynth {
namespace {

using testing::fuzz_data;
using testing::simple_bar;

ChartData pie(std::vector<double> values) {
  ChartData d;
  d.chart_type = ChartType::Pie;
  d.title = "Share";
  d.series.push_back({"Share", "#336699", {}});
  const char* names[] = {"A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L"};
  for (std::size_t i = 0; i < values.size(); ++i) {
    d.series[0].points.push_back({names[i], std::nullopt, values[i], std::nullopt});
  }
  return d;
}

ChartData grouped(std::vector<std::vector<std::string>> labels) {
  ChartData d;
  d.chart_type = ChartType::VGroupedBar;
  d.title = "Grouped";
  int k = 0;
  for (const auto& seq : labels) {
    Series s{"S" + std::to_string(k++), "#aa3300", {}};
    for (const auto& l : seq) s.points.push_back({l, std::nullopt, 1.0, std::nullopt});
    d.series.push_back(s);
  }
  return d;
}

TEST(ChartType, NamesRoundTripForAllTen) {
  EXPECT_EQ(kAllChartTypes.size(), 10u);
  for (ChartType t : kAllChartTypes) {
    EXPECT_EQ(chart_type_from_name(chart_type_name(t)), t);
  }
  EXPECT_FALSE(chart_type_from_name("donut").has_value());
  EXPECT_EQ(chart_type_name(ChartType::HStackedBar), "h-stacked-bar");
}

TEST(Validate, PieWithThreePositiveSegmentsIsOk) {
  EXPECT_TRUE(validate_chart_data(pie({30, 45, 25})).ok());
}

TEST(Validate, NegativePieSegmentIsReportedWithPath) {
  const auto report = validate_chart_data(pie({30, -5, 25}));
  ASSERT_FALSE(report.ok());
  ASSERT_TRUE(report.has_rule("pie-positive"));
  for (const auto& v : report.violations) {
    if (v.rule == "pie-positive") {
      EXPECT_EQ(v.path, "series[0].points[1].value");
    }
  }
}

TEST(Validate, PieSegmentBounds) {
  EXPECT_TRUE(validate_chart_data(pie({1})).has_rule("pie-segment-count"));
  EXPECT_TRUE(validate_chart_data(pie(std::vector<double>(11, 1.0))).has_rule("pie-segment-count"));
  EXPECT_TRUE(validate_chart_data(pie(std::vector<double>(10, 1.0))).ok());
}

TEST(Validate, MisalignedGroupedLabels) {
  EXPECT_TRUE(validate_chart_data(grouped({{"A", "B", "C"}, {"A", "C", "B"}})).has_rule("aligned-labels"));
  EXPECT_TRUE(validate_chart_data(grouped({{"A", "B", "C"}, {"A", "B", "C"}})).ok());
}

TEST(Validate, GroupedSeriesCountBounds) {
  EXPECT_TRUE(validate_chart_data(grouped({{"A", "B"}})).has_rule("series-count"));
  std::vector<std::vector<std::string>> seven(7, {"A", "B"});
  EXPECT_TRUE(validate_chart_data(grouped(seven)).has_rule("series-count"));
}

TEST(Validate, StackedRejectsNegatives) {
  ChartData d = grouped({{"A", "B"}, {"A", "B"}});
  d.chart_type = ChartType::VStackedBar;
  d.series[1].points[0].value = -1;
  EXPECT_TRUE(validate_chart_data(d).has_rule("stacked-nonnegative"));
}

TEST(Validate, DivergingNeedsBothSigns) {
  ChartData d = simple_bar();
  d.chart_type = ChartType::DivergingBar;
  EXPECT_TRUE(validate_chart_data(d).has_rule("diverging-sign-mix"));
  d.series[0].points[1].value = -3;
  EXPECT_TRUE(validate_chart_data(d).ok());
}

TEST(Validate, SimpleBarPointCount) {
  ChartData d = simple_bar();
  d.series[0].points.pop_back();
  EXPECT_TRUE(validate_chart_data(d).has_rule("simple-point-count"));
}

TEST(Validate, BadColorNonFiniteAndDuplicates) {
  ChartData d = simple_bar();
  d.series[0].color = "#12345";
  d.series[0].points[0].value = std::numeric_limits<double>::infinity();
  d.series[0].points[2].label = "Apple";
  const auto r = validate_chart_data(d);
  EXPECT_TRUE(r.has_rule("color-format"));
  EXPECT_TRUE(r.has_rule("value-finite"));
  EXPECT_TRUE(r.has_rule("unique-labels"));
}

TEST(Validate, IsPureAcrossCalls) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ChartData d = fuzz_data(kAllChartTypes[seed % 10], seed);
    d.series[0].color = "red";
    EXPECT_EQ(validate_chart_data(d).violations, validate_chart_data(d).violations);
  }
}

TEST(Validate, EveryViolationHasAPath) {
  ChartData d = pie({-1});
  d.series[0].color = "zz";
  for (const auto& v : validate_chart_data(d).violations) {
    EXPECT_FALSE(v.path.empty());
    EXPECT_FALSE(v.rule.empty());
  }
}

TEST(Validate, GeneratorOutputIsAlwaysValid) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const ChartData d = fuzz_data(kAllChartTypes[seed % 10], seed);
    const auto r = validate_chart_data(d);
    ASSERT_TRUE(r.ok()) << chart_type_name(d.chart_type) << " seed " << seed << ": "
                        << r.violations.front().rule;
  }
}

TEST(Fewshot, EveryBuiltinExemplarValidates) {
  const FewshotStore& store = FewshotStore::builtin();
  for (ChartType t : kAllChartTypes) {
    const auto& ex = store.exemplars(t);
    EXPECT_GE(ex.size(), 8u) << chart_type_name(t);
    std::set<std::size_t> sizes;
    for (const auto& d : ex) {
      EXPECT_EQ(d.chart_type, t);
      const auto r = validate_chart_data(d);
      EXPECT_TRUE(r.ok()) << chart_type_name(t) << " '" << d.title << "': "
                          << (r.ok() ? "" : r.violations.front().path + " " + r.violations.front().rule);
      sizes.insert(d.series.front().points.size());
    }
    EXPECT_GE(sizes.size(), 2u) << "exemplars should vary point counts for " << chart_type_name(t);
  }
}

TEST(Parse, FencedJsonMapsFields) {
  const std::string raw =
      "Here you go:\n```json\n{\"title\": \"Fruit\", \"x_label\": \"Kind\", \"y_label\": \"Units\","
      " \"series\": [{\"name\": \"Sales\", \"color\": \"#112233\", \"points\": ["
      "{\"label\": \"A\", \"value\": 1}, {\"label\": \"B\", \"value\": 2.5}, {\"label\": \"C\", \"value\": 3}]}]}\n```";
  const ChartData d = parse_chart_data(raw, ChartType::VBar, "fruit");
  EXPECT_EQ(d.title, "Fruit");
  EXPECT_EQ(d.x_label, "Kind");
  EXPECT_EQ(d.topic, "fruit");
  ASSERT_EQ(d.series.size(), 1u);
  EXPECT_EQ(d.series[0].points[1].value, 2.5);
  EXPECT_TRUE(validate_chart_data(d).ok());
}

TEST(Parse, ProseWithoutBracesFails) {
  EXPECT_THROW(parse_chart_data("I cannot help with that.", ChartType::Pie, "t"), ParseFailure);
}

TEST(Parse, MissingSeriesFails) {
  EXPECT_THROW(parse_chart_data("{\"title\": \"x\"}", ChartType::Pie, "t"), ParseFailure);
}

TEST(Parse, UnknownKeysAreDropped) {
  nlohmann::json j = nlohmann::json::parse(canonical_json(simple_bar()));
  j["mood"] = "cheerful";
  j["series"][0]["shadow"] = true;
  const ChartData d = parse_chart_data(j.dump(), ChartType::VBar, "fruit sales");
  EXPECT_EQ(d, simple_bar());
  EXPECT_EQ(canonical_json(d).find("mood"), std::string::npos);
}

TEST(Canonical, StableAndFormatsNumbers) {
  ChartData d = simple_bar();
  d.series[0].points[0].value = 10.0;
  const std::string a = canonical_json(d);
  EXPECT_EQ(a, canonical_json(d));
  EXPECT_NE(a.find("\"value\":10}"), std::string::npos) << a;
  EXPECT_EQ(a.find("10.0"), std::string::npos);
}

TEST(Canonical, SeriesOrderIsSemantic) {
  ChartData a = fuzz_data(ChartType::VGroupedBar, 3);
  ChartData b = a;
  std::swap(b.series[0], b.series[1]);
  EXPECT_NE(canonical_json(a), canonical_json(b));
}

TEST(Canonical, KeysAreSorted) {
  EXPECT_EQ(dump_canonical(nlohmann::json{{"b", 1}, {"a", 0.5}, {"c", {{"z", 1}, {"y", 2}}}}),
            "{\"a\":0.5,\"b\":1,\"c\":{\"y\":2,\"z\":1}}");
}

// validate . parse . canonical_json over generated data is the identity.
TEST(Canonical, RoundTripPropertyOverFuzzedData) {
  for (std::uint64_t seed = 0; seed < 1500; ++seed) {
    const ChartData d = fuzz_data(kAllChartTypes[seed % 10], 9000 + seed);
    const std::string text = canonical_json(d);
    const ChartData back = parse_chart_data(text, d.chart_type, d.topic);
    ASSERT_EQ(back, d) << text;
    ASSERT_TRUE(validate_chart_data(back).ok());
    ASSERT_EQ(chart_data_from_json(to_json(d)), d);
  }
}

TEST(Format, NumberRules) {
  EXPECT_EQ(format_number(10.0), "10");
  EXPECT_EQ(format_number(0.25), "0.25");
  EXPECT_EQ(format_number(1e7), "1e+07");
  EXPECT_EQ(format_number(123456.0), "123456");
  EXPECT_EQ(format_answer_number(60.0), "60");
  EXPECT_EQ(format_answer_number(12.5), "12.5");
  EXPECT_EQ(format_answer_number(-1.0 / 3.0), "-0.33");
  EXPECT_EQ(format_answer_number(1.005), "1.01");
  EXPECT_EQ(format_answer_number(-0.001), "0");
}

TEST(Format, AnswerNumbersHaveAtMostTwoDecimals) {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const std::string s = format_answer_number(rng.uniform(-1e5, 1e5));
    const auto dot = s.find('.');
    if (dot != std::string::npos) {
      EXPECT_LE(s.size() - dot - 1, 2u) << s;
      EXPECT_NE(s.back(), '0') << s;
    }
  }
}

TEST(ExtractJson, SkipsBrokenBlocks) {
  const auto j = extract_json("noise {not json} then {\"a\": [1, 2]} tail", '{');
  ASSERT_TRUE(j.has_value());
  EXPECT_EQ((*j)["a"][1], 2);
  EXPECT_FALSE(extract_json("no list here", '[').has_value());
}

TEST(Color, HexParsing) {
  EXPECT_EQ(parse_hex_color("#FF8000"), (Rgb{255, 128, 0}));
  EXPECT_EQ(parse_hex_color("#ff8000"), (Rgb{255, 128, 0}));
  EXPECT_FALSE(parse_hex_color("FF8000").has_value());
  EXPECT_FALSE(parse_hex_color("#FF800").has_value());
  EXPECT_FALSE(parse_hex_color("#GG8000").has_value());
  EXPECT_EQ(to_hex({1, 2, 255}), "#0102FF");
}

TEST(Color, SixteenNamesAndExactMatches) {
  EXPECT_EQ(base_colors().size(), 16u);
  for (const auto& c : base_colors()) EXPECT_EQ(nearest_color_name(c.rgb), c.name);
  for (const auto& c : representative_colors()) EXPECT_EQ(nearest_color_name(c.rgb), c.name);
  EXPECT_EQ(nearest_color_name({250, 5, 5}), "red");
  EXPECT_EQ(nearest_color_name({3, 3, 3}), "black");
  EXPECT_EQ(nearest_color_name({0x1F, 0x77, 0xB4}), "blue");
  EXPECT_EQ(nearest_color_name({0x2C, 0xA0, 0x2C}), "green");
  EXPECT_EQ(nearest_color_name({0xFF, 0x7F, 0x0E}), "orange");
}

}  // namespace
}  // namespace figsynth
