#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "figsynth/dataset.hpp"
#include "figsynth/errors.hpp"
#include "figsynth/io.hpp"
#include "test_support.hpp"

namespace figsynth {
namespace {

FigureRecord make_record(ChartType t, std::size_t index, std::size_t n_qa = 3) {
  FigureRecord r;
  r.figure_id = make_figure_id(t, index);
  r.chart_type = t;
  r.topic = "Topic \"" + std::to_string(index) + "\" café";
  r.image_path = "images/" + std::string(chart_type_name(t)) + "/" + r.figure_id + ".png";
  r.data_path = "data/" + std::string(chart_type_name(t)) + "/" + r.figure_id + ".json";
  r.appearance_path = "appearance/" + std::string(chart_type_name(t)) + "/" + r.figure_id + ".json";
  r.seeds = {index * 4 + 1, index * 4 + 2, ~index, 0xffffffffffffffffULL - index};
  r.content_hash = 0xfedcba9876543210ULL ^ index;
  for (std::size_t k = 0; k < n_qa; ++k) {
    const bool llm = k == n_qa - 1;
    r.qa.push_back({"Question " + std::to_string(k) + "?", std::to_string(k), llm ? "llm-unclassified" : "arithmetic",
                    llm ? QaSource::Llm : QaSource::Template, k % 2 == 0, r.figure_id});
  }
  return r;
}

std::vector<FigureRecord> corpus(std::size_t per_type) {
  std::vector<FigureRecord> out;
  std::size_t index = 0;
  for (ChartType t : kAllChartTypes) {
    for (std::size_t i = 0; i < per_type; ++i) out.push_back(make_record(t, index++));
  }
  return out;
}

TEST(FigureId, Format) {
  EXPECT_EQ(make_figure_id(ChartType::VBar, 42), "v-bar-000042");
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
}

TEST(Manifest, RoundTripIsLossless) {
  testing::TempDir dir;
  const auto records = corpus(7);
  EXPECT_EQ(write_manifest(records, dir / "manifest.jsonl"), records.size());
  const ManifestLoad load = load_manifest(dir / "manifest.jsonl");
  EXPECT_TRUE(load.errors.empty());
  EXPECT_EQ(load.records, records);
  // Rewriting the loaded records reproduces the bytes.
  write_manifest(load.records, dir / "again.jsonl");
  EXPECT_EQ(read_file(dir / "manifest.jsonl"), read_file(dir / "again.jsonl"));
}

TEST(Manifest, DuplicateIdLeavesFileUntouched) {
  testing::TempDir dir;
  write_file_atomic(dir / "manifest.jsonl", "previous\n");
  auto records = corpus(1);
  records.push_back(records.front());
  EXPECT_THROW(write_manifest(records, dir / "manifest.jsonl"), DuplicateId);
  EXPECT_EQ(read_file(dir / "manifest.jsonl"), "previous\n");
}

TEST(Manifest, CorruptLinesAreReportedNotFatal) {
  testing::TempDir dir;
  const auto records = corpus(1);
  write_manifest(records, dir / "m.jsonl");
  std::string text = read_file(dir / "m.jsonl");
  text.insert(text.find('\n') + 1, "{\"figure_id\": \n\n");
  write_file_atomic(dir / "m.jsonl", text);
  const ManifestLoad load = load_manifest(dir / "m.jsonl");
  EXPECT_EQ(load.records.size(), records.size());
  ASSERT_EQ(load.errors.size(), 1u);
  EXPECT_EQ(load.errors[0].line, 2u);
  EXPECT_THROW(load_manifest(dir / "absent.jsonl"), IOFailure);
}

TEST(Stats, CountsAndRates) {
  const auto records = corpus(2);
  const DatasetStats s = compute_stats(records);
  EXPECT_EQ(s.figure_count, 20u);
  EXPECT_EQ(s.qa_count, 60u);
  EXPECT_DOUBLE_EQ(s.qa_per_figure, 3.0);
  EXPECT_EQ(s.per_chart_type.at("pie"), 2u);
  EXPECT_EQ(s.per_qa_type.at("arithmetic"), 40u);
  EXPECT_EQ(s.llm_qa_count, 20u);
  EXPECT_EQ(s.llm_qa_verified, 20u);
  EXPECT_DOUBLE_EQ(s.llm_qa_verification_pass_rate, 1.0);
  EXPECT_DOUBLE_EQ(compute_stats({}).llm_qa_verification_pass_rate, 1.0);
  EXPECT_EQ(compute_stats({}).figure_count, 0u);
}

TEST(Stats, RecomputedFromManifestMatches) {
  testing::TempDir dir;
  const auto records = corpus(3);
  write_manifest(records, dir / "m.jsonl");
  EXPECT_EQ(compute_stats(load_manifest(dir / "m.jsonl").records), compute_stats(records));
}

TEST(Splits, PartitionExactlyAndStratifyWithinOne) {
  for (std::size_t per_type : {1u, 7u, 50u, 53u}) {
    const auto records = corpus(per_type);
    const std::vector<SplitSpec> specs = {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}};
    Rng rng(per_type);
    const auto splits = split_dataset(records, specs, rng);
    ASSERT_EQ(splits.size(), 3u);
    std::multiset<std::string> seen;
    for (const auto& s : splits) {
      for (const auto& r : s.records) seen.insert(r.figure_id);
    }
    EXPECT_EQ(seen.size(), records.size());
    EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), records.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
      for (ChartType t : kAllChartTypes) {
        std::size_t n = 0;
        for (const auto& r : splits[k].records) n += r.chart_type == t;
        EXPECT_LE(std::fabs(static_cast<double>(n) - specs[k].fraction * static_cast<double>(per_type)), 1.0)
            << splits[k].name << " " << chart_type_name(t) << " per_type=" << per_type;
      }
    }
  }
}

TEST(Splits, SeededAndOrderPreserving) {
  const auto records = corpus(20);
  const std::vector<SplitSpec> specs = {{"a", 0.5}, {"b", 0.5}};
  Rng r1(5), r2(5), r3(6);
  const auto a = split_dataset(records, specs, r1);
  const auto b = split_dataset(records, specs, r2);
  const auto c = split_dataset(records, specs, r3);
  EXPECT_EQ(a[0].records, b[0].records);
  EXPECT_NE(a[0].records, c[0].records);
  for (const auto& s : a) {
    for (std::size_t i = 1; i < s.records.size(); ++i) {
      EXPECT_LT(s.records[i - 1].figure_id.substr(s.records[i - 1].figure_id.size() - 6),
                s.records[i].figure_id.substr(s.records[i].figure_id.size() - 6));
    }
  }
}

TEST(Splits, BadFractions) {
  const auto records = corpus(2);
  Rng rng(1);
  using V = std::vector<SplitSpec>;
  EXPECT_THROW(split_dataset(records, V{{"a", 0.5}, {"b", 0.4}}, rng), BadFractions);
  EXPECT_THROW(split_dataset(records, V{{"a", 1.2}, {"b", -0.2}}, rng), BadFractions);
  EXPECT_THROW(split_dataset(records, V{{"a", 0.5}, {"a", 0.5}}, rng), BadFractions);
  EXPECT_THROW(split_dataset(records, V{}, rng), BadFractions);
  EXPECT_THROW(split_dataset(records, V{{"a", std::nan("")}}, rng), BadFractions);
}

TEST(Prompt, ThreeTokenFormats) {
  EXPECT_EQ(format_prompt(PromptToken::ChartQa, "What is X?"), "<chartqa> What is X? <s_answer>");
  EXPECT_EQ(format_prompt(PromptToken::SyntheticQa, "What is X?"), "<synthetic_qa> What is X? <s_answer>");
  EXPECT_EQ(format_prompt(PromptToken::Both, "What is X?"), "<chartqa> <synthetic_qa> What is X? <s_answer>");
  for (auto t : {PromptToken::ChartQa, PromptToken::SyntheticQa, PromptToken::Both}) {
    EXPECT_EQ(prompt_token_from_name(prompt_token_name(t)), t);
  }
}

TEST(Training, QaAndJsonParseExamples) {
  testing::TempDir dir;
  FigureRecord r = make_record(ChartType::VBar, 0, 2);
  const ChartData d = testing::simple_bar();
  write_file_atomic(dir.path() / r.data_path, canonical_json(d));
  const std::vector<FigureRecord> records = {r};

  const auto qa = emit_training_examples(records, PromptToken::Both, TrainingTask::Qa, dir.path());
  ASSERT_EQ(qa.size(), 2u);
  EXPECT_EQ(qa[0].image_path, r.image_path);
  EXPECT_EQ(qa[0].input_text, "<chartqa> <synthetic_qa> Question 0? <s_answer>");
  EXPECT_EQ(qa[0].target_text, "0");

  const auto jp = emit_training_examples(records, PromptToken::ChartQa, TrainingTask::JsonParse, dir.path());
  ASSERT_EQ(jp.size(), 1u);
  EXPECT_EQ(jp[0].input_text, std::string(kJsonParseToken));
  EXPECT_EQ(jp[0].target_text, canonical_json(d));
}

TEST(Io, AtomicWriteCreatesParents) {
  testing::TempDir dir;
  write_file_atomic(dir.path() / "a" / "b" / "c.txt", "hello");
  EXPECT_EQ(read_file(dir.path() / "a" / "b" / "c.txt"), "hello");
  write_file_atomic(dir.path() / "a" / "b" / "c.txt", "again");
  EXPECT_EQ(read_file(dir.path() / "a" / "b" / "c.txt"), "again");
  EXPECT_THROW(read_file(dir.path() / "missing"), IOFailure);
}

}  // namespace
}  // namespace figsynth
