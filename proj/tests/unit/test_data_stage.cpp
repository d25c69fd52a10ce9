#include <gtest/gtest.h>

#include "figsynth/data_stage.hpp"
#include "figsynth/errors.hpp"
#include "test_support.hpp"

namespace figsynth {
namespace {

class CannedBackend : public ChatBackend {
 public:
  explicit CannedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  ChatResponse complete(const ChatRequest& req) override {
    prompts.push_back(req);
    const std::string text = replies_[std::min(calls, replies_.size() - 1)];
    ++calls;
    return {text, "canned", 0, 0};
  }
  std::size_t calls = 0;
  std::vector<ChatRequest> prompts;

 private:
  std::vector<std::string> replies_;
};

TEST(Fewshot, SelectsTwoDistinct) {
  Rng rng(3);
  for (ChartType t : kAllChartTypes) {
    for (int i = 0; i < 20; ++i) {
      const auto picked = select_fewshot(FewshotStore::builtin(), t, rng);
      ASSERT_EQ(picked.size(), kFewshotPerPrompt);
      EXPECT_NE(picked[0], picked[1]);
    }
  }
}

TEST(Fewshot, ShortStoreThrows) {
  FewshotStore store;
  store.add(testing::simple_bar());
  Rng rng(1);
  EXPECT_THROW(select_fewshot(store, ChartType::VBar, rng), StoreMissing);
  EXPECT_THROW(select_fewshot(store, ChartType::Pie, rng), StoreMissing);
}

TEST(DataPrompt, CarriesTopicAndExemplars) {
  Rng rng(2);
  const auto ex = select_fewshot(FewshotStore::builtin(), ChartType::Pie, rng);
  const ChatRequest req = build_data_prompt("Pizza toppings", ChartType::Pie, ex);
  EXPECT_NE(req.user.find("Pizza toppings"), std::string::npos);
  EXPECT_NE((req.system + req.user).find(ex[0].title), std::string::npos);
  EXPECT_EQ(classify_prompt(req), StageTag::Data);
}

TEST(Generate, ValidOnFirstAttempt) {
  auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{canonical_json(testing::simple_bar())});
  Gateway gw(backend, 1);
  Rng rng(1);
  const auto out = generate_chart_data("fruit sales", ChartType::VBar, gw, rng);
  ASSERT_EQ(out.status, GenStatus::Ok);
  EXPECT_EQ(out.attempts, 1);
  EXPECT_EQ(out.data->series, testing::simple_bar().series);
}

TEST(Generate, InvalidThenValidRetriesWithFreshExemplars) {
  ChartData bad = testing::simple_bar();
  bad.series[0].color = "blue";
  auto backend = std::make_shared<CannedBackend>(
      std::vector<std::string>{"no json", canonical_json(bad), canonical_json(testing::simple_bar())});
  Gateway gw(backend, 1);
  Rng rng(4);
  const auto out = generate_chart_data("fruit sales", ChartType::VBar, gw, rng);
  ASSERT_EQ(out.status, GenStatus::Ok);
  EXPECT_EQ(out.attempts, 3);
  EXPECT_TRUE(validate_chart_data(*out.data).ok());
}

TEST(Generate, RejectsWithoutRepairAndRespectsMaxAttempts) {
  ChartData bad = testing::simple_bar();
  bad.series[0].points[0].value = -4;
  bad.chart_type = ChartType::Pie;
  for (int max_attempts : {1, 2, 5}) {
    auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{canonical_json(bad)});
    Gateway gw(backend, 1);
    Rng rng(9);
    const auto out = generate_chart_data("fruit", ChartType::Pie, gw, rng, max_attempts);
    EXPECT_EQ(out.status, GenStatus::Rejected);
    EXPECT_FALSE(out.data.has_value());
    EXPECT_EQ(out.attempts, max_attempts);
    EXPECT_EQ(backend->calls, static_cast<std::size_t>(max_attempts));
    ASSERT_TRUE(out.last_violations.has_value());
    EXPECT_TRUE(out.last_violations->has_rule("pie-positive"));
  }
}

TEST(Generate, ParseFailureIsReportedAsViolation) {
  auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{"sorry"});
  Gateway gw(backend, 1);
  Rng rng(9);
  const auto out = generate_chart_data("fruit", ChartType::VBar, gw, rng, 2);
  ASSERT_TRUE(out.last_violations.has_value());
  ASSERT_EQ(out.last_violations->violations.size(), 1u);
  EXPECT_EQ(out.last_violations->violations[0].rule, "parse-failure");
  EXPECT_EQ(out.last_violations->violations[0].path, "$");
}

TEST(Generate, MockIsDeterministicAndValid) {
  for (ChartType t : kAllChartTypes) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Gateway g1(std::make_shared<MockBackend>(seed), 1);
      Gateway g2(std::make_shared<MockBackend>(seed), 1);
      Rng r1(seed), r2(seed);
      const auto a = generate_chart_data("Coffee sales by region", t, g1, r1);
      const auto b = generate_chart_data("Coffee sales by region", t, g2, r2);
      ASSERT_EQ(a.status, GenStatus::Ok) << chart_type_name(t);
      EXPECT_EQ(canonical_json(*a.data), canonical_json(*b.data));
      EXPECT_TRUE(validate_chart_data(*a.data).ok());
      EXPECT_EQ(a.data->chart_type, t);
      EXPECT_LE(a.attempts, kDefaultDataAttempts);
    }
  }
}

}  // namespace
}  // namespace figsynth
