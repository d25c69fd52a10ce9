#include <gtest/gtest.h>

#include <set>

#include "figsynth/errors.hpp"
#include "figsynth/topics.hpp"
#include "test_support.hpp"

namespace figsynth {
namespace {

TEST(ParseTopics, StripsNumberingBulletsAndQuotes) {
  const auto topics = parse_topics(
      "Here are some topics:\n"
      "1. Coffee sales by region\n"
      "2) \"Rainfall in Lisbon\"\n"
      "- Solar panel output per month\n"
      "* Library visits by weekday\n"
      "\n"
      "ok\n"
      "   3.  Bicycle commuting rates   \n");
  const std::vector<std::string> expected = {"Coffee sales by region", "Rainfall in Lisbon",
                                             "Solar panel output per month", "Library visits by weekday",
                                             "Bicycle commuting rates"};
  EXPECT_EQ(topics, expected);
}

TEST(ParseTopics, DropsOverlongLines) {
  const auto topics = parse_topics("1. " + std::string(121, 'a') + "\n2. " + std::string(120, 'b'));
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0].size(), 120u);
}

TEST(NormalizeTopic, CaseWhitespaceAndTrailingPunctuation) {
  EXPECT_EQ(normalize_topic("  Coffee   Sales BY region. "), "coffee sales by region");
  EXPECT_EQ(normalize_topic("Coffee sales by region!?"), "coffee sales by region");
}

TEST(Dedup, InjectedDuplicatesReduceToExactCount) {
  const std::vector<std::string> fixture = {
      "Coffee sales by region", "coffee sales by region", "Coffee  sales by region.",
      "Rainfall in Lisbon",     "RAINFALL IN LISBON",     "Solar output per month",
      "Library visits",         "library visits!",        "Rainfall in Lisbon",
      "Tea exports"};
  const auto unique = dedup_topics(fixture);
  const std::vector<std::string> expected = {"Coffee sales by region", "Rainfall in Lisbon",
                                             "Solar output per month", "Library visits", "Tea exports"};
  EXPECT_EQ(unique, expected);
}

TEST(Dedup, EmptyInput) { EXPECT_TRUE(dedup_topics({}).empty()); }

// Random lists built from a small vocabulary with case/space/punctuation noise.
TEST(Dedup, IdempotentAndDistinctProperty) {
  const std::vector<std::string> base = {"alpha beta", "gamma", "delta epsilon", "zeta eta theta",
                                         "iota", "kappa lambda"};
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> list;
    std::set<std::string> expected_keys;
    const std::size_t n = rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      std::string s = rng.pick(base);
      expected_keys.insert(s);
      if (rng.chance(0.3)) {
        for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      }
      if (rng.chance(0.3)) s = "  " + s + " ";
      if (rng.chance(0.3)) s += ".";
      list.push_back(s);
    }
    const auto once = dedup_topics(list);
    EXPECT_EQ(dedup_topics(once), once);
    EXPECT_EQ(once.size(), expected_keys.size());
    std::set<std::string> keys;
    for (const auto& t : once) keys.insert(normalize_topic(t));
    EXPECT_EQ(keys.size(), once.size());
  }
}

TEST(TopicPrompt, BatchBounds) {
  EXPECT_THROW(build_topic_prompt(ChartType::Pie, 0), ConfigError);
  EXPECT_THROW(build_topic_prompt(ChartType::Pie, 101), ConfigError);
  const ChatRequest a = build_topic_prompt(ChartType::Pie, 20, 0);
  const ChatRequest b = build_topic_prompt(ChartType::Pie, 20, 1);
  EXPECT_NE(a.user, b.user);
  EXPECT_EQ(classify_prompt(a), StageTag::Topic);
}

TEST(TopicPool, MockPoolIsDistinctAndDeterministic) {
  for (ChartType t : {ChartType::Pie, ChartType::Line, ChartType::HStackedBar}) {
    Gateway g1(std::make_shared<MockBackend>(11), 2);
    Gateway g2(std::make_shared<MockBackend>(11), 2);
    const TopicPool a = generate_topic_pool(t, 60, g1);
    const TopicPool b = generate_topic_pool(t, 60, g2);
    EXPECT_EQ(a.topics, b.topics);
    EXPECT_EQ(a.topics.size(), 60u);
    std::set<std::string> keys;
    for (const auto& s : a.topics) {
      keys.insert(normalize_topic(s));
      EXPECT_GE(s.size(), kMinTopicLength);
      EXPECT_LE(s.size(), kMaxTopicLength);
    }
    EXPECT_EQ(keys.size(), a.topics.size());
  }
}

class RepeatingBackend : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest&) override {
    ++calls;
    return {"1. Same topic again\n2. same topic again.\n3. Another one", "repeat", 0, 0};
  }
  int calls = 0;
};

TEST(TopicPool, BudgetStopsDuplicateOnlyModel) {
  auto backend = std::make_shared<RepeatingBackend>();
  Gateway gw(backend, 1);
  TopicPoolOptions opts;
  opts.query_budget = 5;
  const TopicPool pool = generate_topic_pool(ChartType::VBar, 50, gw, opts);
  EXPECT_EQ(pool.topics.size(), 2u);
  EXPECT_EQ(backend->calls, 5);
  EXPECT_EQ(pool.query_count, 5);
  EXPECT_GT(pool.duplicates_dropped, 0);
}

TEST(TopicPool, FileRoundTrip) {
  testing::TempDir dir;
  const std::vector<std::string> topics = {"Coffee sales", "Café visits in Zürich", "Rain"};
  write_topic_pool(topics, dir / "pie.txt");
  EXPECT_EQ(read_topic_pool(dir / "pie.txt"), topics);
}

}  // namespace
}  // namespace figsynth
