// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "brute_oracle.hpp"
#include "figsynth/errors.hpp"
#include "figsynth/io.hpp"
#include "figsynth/pipeline.hpp"
#include "figsynth/render.hpp"
#include "figsynth/topics.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace figsynth;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr double kMaxRunSeconds = 300.0;
constexpr std::uint64_t kMinSpace = 2000;
constexpr std::size_t kAppearanceSamples = 1000;
constexpr std::size_t kMinDistinctHashes = 500;
constexpr double kMinQaPerFigure = 4.0;
constexpr std::size_t kOracleFuzzCases = 1000;

PipelineConfig run_config(const fs::path& out) {
  PipelineConfig cfg = PipelineConfig::defaults();  // 50 per type, mock gateway
  cfg.output_dir = out;
  cfg.master_seed = 20240917;
  cfg.parallelism = 4;
  return cfg;
}

struct Run {
  GenerateResult result;
  double seconds = 0;
  std::string manifest;
  std::vector<std::uint64_t> hashes;
};

Run full_run(const fs::path& out) {
  const PipelineConfig cfg = run_config(out);
  const auto start = std::chrono::steady_clock::now();
  cmd_topics(cfg);
  Run run;
  run.result = cmd_generate(cfg);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.manifest = read_file(out / std::string(kManifestFile));
  for (const auto& rec : load_manifest(out / std::string(kManifestFile)).records) {
    const std::string png = read_file(out / rec.image_path);
    run.hashes.push_back(image_hash({png.begin(), png.end()}));
  }
  return run;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Outcome error_free(const Run& run, const fs::path& out) {
  const auto& r = run.result;
  const std::string rejections = read_file(out / std::string(kRejectionsFile));
  const bool ok = r.requested == 500 && r.produced == 500 && r.failures.empty() && rejections.empty() &&
                  run.seconds < kMaxRunSeconds;
  return {ok, std::to_string(r.produced) + "/" + std::to_string(r.requested) + " figures, " +
                  std::to_string(r.failures.size()) + " errors, " + fmt(run.seconds) + " s"};
}

Outcome appearance_floor() {
  std::uint64_t min_space = ~0ULL;
  std::size_t min_distinct = ~std::size_t{0};
  for (ChartType t : kAllChartTypes) {
    min_space = std::min(min_space, appearance_space_size(t));
    const ChartData data = testing::fuzz_data(t, 1);
    Rng rng(derive_seed(7, static_cast<std::uint64_t>(t), "acceptance"));
    std::set<std::uint64_t> hashes;
    for (std::size_t i = 0; i < kAppearanceSamples; ++i) hashes.insert(render_hash(data, sample_appearance(t, rng)));
    min_distinct = std::min(min_distinct, hashes.size());
  }
  return {min_space >= kMinSpace && min_distinct >= kMinDistinctHashes,
          "min space " + std::to_string(min_space) + ", min distinct hashes " + std::to_string(min_distinct) + "/" +
              std::to_string(kAppearanceSamples)};
}

Outcome qa_density(const fs::path& out) {
  const json stats = json::parse(read_file(out / std::string(kStatsFile)));
  const double q = stats.at("qa_per_figure").get<double>();
  return {q >= kMinQaPerFigure, "qa_per_figure " + fmt(q) + " from stats.json"};
}

Outcome oracle_soundness() {
  std::size_t verified = 0, compared = 0, bad_verify = 0, bad_arith = 0;
  for (std::uint64_t seed = 0; seed < kOracleFuzzCases; ++seed) {
    const ChartData d = testing::fuzz_data(kAllChartTypes[seed % 10], 500000 + seed);
    for (const auto& t : qa_templates()) {
      if (!template_applicable(t, d)) continue;
      for (const Bindings& b : candidate_bindings(t, d)) {
        const std::string answer = oracle_answer(d, t, b);
        const QAPair qa{fill_pattern(t, b), answer, "", QaSource::Template, false, ""};
        bad_verify += verify_qa(d, qa).status != VerifyStatus::Pass;
        ++verified;
        if (const auto expected = testing::brute_force(d, t, b)) {
          bad_arith += *expected != answer;
          ++compared;
        }
      }
    }
  }
  return {bad_verify == 0 && bad_arith == 0 && verified >= 1000,
          std::to_string(verified) + " template QAs verified (" + std::to_string(bad_verify) + " failed), " +
              std::to_string(compared) + " brute-force comparisons (" + std::to_string(bad_arith) + " mismatched)"};
}

Outcome metric_suite() {
  struct Case {
    const char* pred;
    const char* gold;
    bool expect;
  };
  const Case cases[] = {
      {"104", "100", true}, {"106", "100", false}, {"95", "100", true},   {"94.9", "100", false},
      {"Red", "red", true}, {"YES", "Yes", true},  {"blue", "red", false}, {"0", "0", true},
      {"0.01", "0", false}, {"-0.5", "0", false},  {"$1,000", "1000", true}, {"50%", "50", true},
  };
  std::size_t passed = 0;
  for (const Case& c : cases) passed += relaxed_match(c.pred, c.gold) == c.expect;
  const std::size_t n = std::size(cases);
  return {passed == n, std::to_string(passed) + "/" + std::to_string(n) + " metric cases"};
}

Outcome determinism(const Run& a, const Run& b) {
  const bool same = a.manifest == b.manifest && a.hashes == b.hashes && !a.hashes.empty();
  return {same, same ? "manifests byte-identical, " + std::to_string(a.hashes.size()) + " image hashes equal"
                     : "runs differ"};
}

Outcome dedup_correctness() {
  const std::vector<std::string> fixture = {
      "Coffee sales by region", "coffee sales by region", "COFFEE  SALES BY REGION.", "Rainfall in Lisbon",
      "rainfall in lisbon!",    "Solar output per month", "Library visits",           "library   visits",
      "Tea exports",            "Rainfall in Lisbon"};
  const std::size_t expected_unique = 5;
  const bool fixture_ok = dedup_topics(fixture).size() == expected_unique;

  Rng rng(31);
  const std::vector<std::string> vocab = {"alpha", "beta gamma", "delta", "epsilon zeta", "eta"};
  bool idempotent = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> list;
    for (std::size_t i = 0, n = rng.below(25); i < n; ++i) {
      std::string s = rng.pick(vocab);
      if (rng.chance(0.5)) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
      if (rng.chance(0.3)) s += "?";
      list.push_back(s);
    }
    const auto once = dedup_topics(list);
    idempotent = idempotent && dedup_topics(once) == once;
  }
  return {fixture_ok && idempotent, "fixture " + std::to_string(dedup_topics(fixture).size()) + "/" +
                                        std::to_string(expected_unique) + " unique, idempotent over 1000 lists: " +
                                        (idempotent ? "yes" : "no")};
}

Outcome ablation_arms(const fs::path& dataset, const fs::path& scratch) {
  PipelineConfig cfg = run_config(scratch / "fixed");
  for (ChartType t : kAllChartTypes) cfg.counts[t] = 5;
  cfg.randomize_appearance = false;
  cmd_topics(cfg);
  cmd_generate(cfg);
  std::map<ChartType, std::set<std::string>> styles;
  for (const auto& r : load_manifest(cfg.output_dir / std::string(kManifestFile)).records) {
    styles[r.chart_type].insert(read_file(cfg.output_dir / r.appearance_path));
  }
  bool single = styles.size() == kAllChartTypes.size();
  for (const auto& [t, s] : styles) single = single && s.size() == 1;

  const std::pair<PromptToken, std::string> formats[] = {
      {PromptToken::ChartQa, "<chartqa> "}, {PromptToken::SyntheticQa, "<synthetic_qa> "},
      {PromptToken::Both, "<chartqa> <synthetic_qa> "}};
  const auto records = load_manifest(dataset / std::string(kManifestFile)).records;
  bool tokens = true;
  for (const auto& [token, prefix] : formats) {
    ExportOptions opts;
    opts.token = token;
    const fs::path out = scratch / ("export-" + std::string(prompt_token_name(token)) + ".jsonl");
    cmd_export_training(dataset, out, opts);
    std::ifstream in(out);
    std::string line;
    std::size_t row = 0;
    for (const auto& rec : records) {
      for (const auto& qa : rec.qa) {
        if (!std::getline(in, line)) return {false, "export ended early"};
        const json j = json::parse(line);
        tokens = tokens && j.at("input_text") == prefix + qa.question + " <s_answer>" &&
                 j.at("target_text") == qa.answer;
        ++row;
      }
    }
    tokens = tokens && row > 0;
  }
  return {single && tokens, std::string("fixed appearance single per type: ") + (single ? "yes" : "no") +
                                ", three prompt-token formats verbatim: " + (tokens ? "yes" : "no")};
}

Outcome manifest_and_splits(const fs::path& dataset, const fs::path& scratch) {
  const fs::path path = dataset / std::string(kManifestFile);
  const ManifestLoad load = load_manifest(path);
  write_manifest(load.records, scratch / "rewritten.jsonl");
  const ManifestLoad reload = load_manifest(scratch / "rewritten.jsonl");
  const bool lossless = load.errors.empty() && load.records.size() == 500 && reload.records == load.records &&
                        read_file(path) == read_file(scratch / "rewritten.jsonl");

  const std::vector<SplitSpec> specs = {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}};
  Rng rng(99);
  const auto splits = split_dataset(load.records, specs, rng);
  std::multiset<std::string> ids;
  double worst = 0;
  std::map<ChartType, std::size_t> per_type;
  for (const auto& r : load.records) ++per_type[r.chart_type];
  for (std::size_t k = 0; k < splits.size(); ++k) {
    std::map<ChartType, std::size_t> counts;
    for (const auto& r : splits[k].records) {
      ids.insert(r.figure_id);
      ++counts[r.chart_type];
    }
    for (const auto& [t, n] : per_type) {
      worst = std::max(worst, std::fabs(static_cast<double>(counts[t]) - specs[k].fraction * static_cast<double>(n)));
    }
  }
  const bool partition = ids.size() == load.records.size() &&
                         std::set<std::string>(ids.begin(), ids.end()).size() == load.records.size();
  return {lossless && partition && worst <= 1.0,
          std::string("round trip lossless: ") + (lossless ? "yes" : "no") + ", exact partition: " +
              (partition ? "yes" : "no") + ", worst per-type deviation " + fmt(worst)};
}

}  // namespace

int main() {
  testing::TempDir scratch("figsynth-acceptance");
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
  };

  const fs::path run_a = scratch / "run-a";
  const fs::path run_b = scratch / "run-b";
  std::optional<Run> a, b;
  try {
    a = full_run(run_a);
    b = full_run(run_b);
  } catch (const std::exception& e) {
    std::cout << "500-figure run failed: " << e.what() << std::endl;
  }
  auto need = [&](const std::optional<Run>& r) -> const Run& {
    if (!r) throw std::runtime_error("500-figure run unavailable");
    return *r;
  };

  report(1, "error-free generation", [&] { return error_free(need(a), run_a); });
  report(2, "appearance-space floor", appearance_floor);
  report(3, "QA density", [&] {
    need(a);
    return qa_density(run_a);
  });
  report(4, "oracle soundness", oracle_soundness);
  report(5, "relaxed-accuracy metric", metric_suite);
  report(6, "whole-run determinism", [&] { return determinism(need(a), need(b)); });
  report(7, "dedup correctness", dedup_correctness);
  report(8, "F1/F4 ablation arms", [&] {
    need(a);
    return ablation_arms(run_a, scratch.path());
  });
  report(9, "manifest round trip and splits", [&] {
    need(a);
    return manifest_and_splits(run_a, scratch.path());
  });
  return failed;
}
