#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "figsynth/chart_model.hpp"
#include "figsynth/gateway.hpp"

namespace figsynth {

inline constexpr int kDefaultTopicBatch = 20;
inline constexpr std::size_t kMinTopicLength = 3;
inline constexpr std::size_t kMaxTopicLength = 120;

struct TopicPool {
  ChartType chart_type = ChartType::VBar;
  std::vector<std::string> topics;
  int query_count = 0;
  int duplicates_dropped = 0;
};

// Asks for `batch_size` numbered single-line topics (1..100, else ConfigError).
// `batch_index` distinguishes repeated queries so each one is a distinct
// request.
ChatRequest build_topic_prompt(ChartType chart_type, int batch_size, int batch_index = 0);

// One topic per line with numbering, bullets and quotes stripped. Header lines
// ending in ':' and lines outside 3..120 characters are dropped.
std::vector<std::string> parse_topics(std::string_view response);

// Lowercase, whitespace collapsed, trailing punctuation removed.
std::string normalize_topic(std::string_view topic);

// Order-preserving; the first spelling of each normalized topic wins.
std::vector<std::string> dedup_topics(const std::vector<std::string>& topics);

struct TopicPoolOptions {
  int batch_size = kDefaultTopicBatch;
  // Defaults to 10 * ceil(target / batch_size).
  std::optional<int> query_budget;
};

// Queries until `target_count` unique topics are collected or the budget is
// spent. Partial pools are returned; GatewayExhausted escapes only when
// nothing was collected.
TopicPool generate_topic_pool(ChartType chart_type, std::size_t target_count, Gateway& gateway,
                              const TopicPoolOptions& options = {});

// Topic pools on disk: UTF-8 text, one topic per line.
void write_topic_pool(const std::vector<std::string>& topics, const std::filesystem::path& path);
std::vector<std::string> read_topic_pool(const std::filesystem::path& path);

}  // namespace figsynth
