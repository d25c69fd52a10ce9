#include "figsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "figsynth/data_stage.hpp"
#include "figsynth/errors.hpp"
#include "figsynth/io.hpp"
#include "figsynth/qa.hpp"
#include "figsynth/render.hpp"
#include "figsynth/rng.hpp"
#include "figsynth/topics.hpp"

namespace figsynth {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string type_dir(ChartType type) { return std::string(chart_type_name(type)); }

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseFailure(path.string() + ": row " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::shared_ptr<ChatBackend> default_backend(const GatewayConfig& cfg) {
  if (cfg.mode == GatewayMode::Mock) return std::make_shared<MockBackend>(cfg.mock_seed);
  return std::make_shared<HttpBackend>(cfg);
}

ChartData canonicalize(const ChartData& data) {
  return chart_data_from_json(json::parse(canonical_json(data)));
}

std::string qa_key(std::string_view question) {
  std::string out;
  for (char c : normalize_answer(question)) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<QAPair> make_qa(const ChartData& data, const std::string& figure_id, const QaConfig& qc,
                            Gateway& gateway, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<QAPair> out;
  if (qc.mode != QaMode::Llm) out = instantiate_templates(data, rng, std::size_t(qc.k_template));
  if (qc.mode != QaMode::Template) {
    const auto exemplars = select_qa_exemplars(data.chart_type, rng);
    const auto reply = gateway.complete(build_qa_prompt(data, exemplars));
    std::set<std::string> seen;
    for (const auto& q : out) seen.insert(qa_key(q.question));
    for (auto& q : parse_qa_response(reply.text)) {
      if (qc.verify) {
        const auto v = verify_qa(data, q);
        q.verified = v.status == VerifyStatus::Pass;
        if (v.template_id > 0) q.qa_type = std::string(qa_category_name(qa_template(v.template_id).category));
        if (qc.drop_unverified && !q.verified) continue;
      }
      if (!seen.insert(qa_key(q.question)).second) continue;
      out.push_back(std::move(q));
    }
  }
  for (auto& q : out) q.figure_id = figure_id;
  return out;
}

struct FigureJob {
  ChartType type = ChartType::VBar;
  std::size_t local = 0;
  std::size_t global = 0;
  std::string topic;
  FigureSeeds seeds;
};

struct FigureOutcome {
  std::optional<FigureRecord> record;
  std::optional<FigureFailure> failure;
  bool reused = false;
};

FigureOutcome run_figure(const FigureJob& job, const PipelineConfig& cfg, Gateway& gateway) {
  const fs::path& root = cfg.output_dir;
  FigureRecord rec;
  rec.figure_id = make_figure_id(job.type, job.local);
  rec.chart_type = job.type;
  rec.topic = job.topic;
  rec.seeds = job.seeds;
  rec.image_path = image_rel_path(job.type, rec.figure_id);
  rec.data_path = data_rel_path(job.type, rec.figure_id);
  rec.appearance_path = appearance_rel_path(job.type, rec.figure_id);
  const std::string qa_path = qa_rel_path(job.type, rec.figure_id);

  FigureOutcome out;
  std::string stage = "data";
  int existing = 0;
  try {
    ChartData data;
    if (fs::exists(root / rec.data_path)) {
      data = chart_data_from_json(json::parse(read_file(root / rec.data_path)));
      ++existing;
    } else {
      Rng rng(job.seeds.data);
      const auto gen = generate_chart_data(job.topic, job.type, gateway, rng, cfg.data_max_attempts);
      if (gen.status != GenStatus::Ok) {
        out.failure = FigureFailure{rec.figure_id, stage, dump_canonical(to_json(gen))};
        return out;
      }
      data = canonicalize(*gen.data);
      const auto report = validate_chart_data(data);
      if (!report.ok()) {
        out.failure = FigureFailure{rec.figure_id, stage,
                                    "canonical form breaks rule " + report.violations.front().rule};
        return out;
      }
      write_file_atomic(root / rec.data_path, canonical_json(data) + "\n");
    }

    stage = "appearance";
    AppearanceSpec app;
    if (fs::exists(root / rec.appearance_path)) {
      app = appearance_from_json(json::parse(read_file(root / rec.appearance_path)));
      ++existing;
    } else {
      Rng rng(job.seeds.appearance);
      app = cfg.randomize_appearance ? sample_appearance(job.type, rng) : fixed_appearance(job.type);
      write_file_atomic(root / rec.appearance_path, dump_canonical(to_json(app)) + "\n");
    }

    stage = "render";
    if (fs::exists(root / rec.image_path)) {
      const std::string bytes = read_file(root / rec.image_path);
      rec.content_hash = image_hash(std::vector<unsigned char>(bytes.begin(), bytes.end()));
      ++existing;
    } else {
      const auto fig = render_figure(data, app);
      rec.content_hash = fig.content_hash;
      write_file_atomic(root / rec.image_path,
                        std::string_view(reinterpret_cast<const char*>(fig.png_bytes.data()), fig.png_bytes.size()));
    }

    stage = "qa";
    if (fs::exists(root / qa_path)) {
      for (const auto& row : read_jsonl(root / qa_path)) rec.qa.push_back(qa_pair_from_json(row));
      ++existing;
    } else {
      rec.qa = make_qa(data, rec.figure_id, cfg.qa, gateway, job.seeds.qa);
      std::vector<json> rows;
      for (const auto& q : rec.qa) rows.push_back(to_json(q));
      write_jsonl(rows, root / qa_path);
    }
  } catch (const AuthError&) {
    throw;
  } catch (const MissingApiKey&) {
    throw;
  } catch (const std::exception& e) {
    out.failure = FigureFailure{rec.figure_id, stage, e.what()};
    return out;
  }
  out.reused = existing == 4;
  out.record = std::move(rec);
  return out;
}

void check_key(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

std::string_view qa_mode_name(QaMode mode) {
  switch (mode) {
    case QaMode::Template:
      return "template";
    case QaMode::Llm:
      return "llm";
    case QaMode::Both:
      return "both";
  }
  return "llm";
}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  for (ChartType t : kAllChartTypes) cfg.counts[t] = 50;
  return cfg;
}

int PipelineConfig::count(ChartType type) const {
  const auto it = counts.find(type);
  return it == counts.end() ? 0 : it->second;
}

std::size_t PipelineConfig::total_figures() const {
  std::size_t n = 0;
  for (const auto& [t, c] : counts) n += std::size_t(std::max(0, c));
  return n;
}

void PipelineConfig::validate() const {
  for (const auto& [t, c] : counts) {
    if (c < 0) throw ConfigError("count for " + std::string(chart_type_name(t)) + " must be >= 0");
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (!(failure_threshold >= 0 && failure_threshold <= 1)) {
    throw ConfigError("failure_threshold must lie in [0, 1]");
  }
  if (qa.k_template < 1) throw ConfigError("qa.k_template must be >= 1");
  if (topic_batch_size < 1 || topic_batch_size > 100) throw ConfigError("topic_batch_size must be 1..100");
  if (data_max_attempts < 1) throw ConfigError("data_max_attempts must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  gateway.validate();
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_key(j,
            {"master_seed", "figures_per_type", "counts", "qa", "randomize_appearance", "gateway", "output_dir",
             "parallelism", "failure_threshold", "topic_batch_size", "data_max_attempts"},
            "config");
  PipelineConfig cfg = PipelineConfig::defaults();
  try {
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (j.contains("figures_per_type")) {
      const int n = j.at("figures_per_type").get<int>();
      for (ChartType t : kAllChartTypes) cfg.counts[t] = n;
    }
    if (j.contains("counts")) {
      for (const auto& [name, n] : j.at("counts").items()) {
        const auto t = chart_type_from_name(name);
        if (!t) throw ConfigError("unknown chart type '" + name + "' in counts");
        cfg.counts[*t] = n.get<int>();
      }
    }
    if (j.contains("qa")) {
      const json& q = j.at("qa");
      check_key(q, {"mode", "k_template", "verify", "drop_unverified"}, "qa");
      const std::string mode = q.value("mode", std::string(qa_mode_name(cfg.qa.mode)));
      if (mode == "template") {
        cfg.qa.mode = QaMode::Template;
      } else if (mode == "llm") {
        cfg.qa.mode = QaMode::Llm;
      } else if (mode == "both") {
        cfg.qa.mode = QaMode::Both;
      } else {
        throw ConfigError("qa.mode must be template, llm or both");
      }
      cfg.qa.k_template = q.value("k_template", cfg.qa.k_template);
      cfg.qa.verify = q.value("verify", cfg.qa.verify);
      cfg.qa.drop_unverified = q.value("drop_unverified", cfg.qa.drop_unverified);
    }
    cfg.randomize_appearance = j.value("randomize_appearance", cfg.randomize_appearance);
    if (j.contains("gateway")) cfg.gateway = gateway_config_from_json(j.at("gateway"));
    cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    cfg.failure_threshold = j.value("failure_threshold", cfg.failure_threshold);
    cfg.topic_batch_size = j.value("topic_batch_size", cfg.topic_batch_size);
    cfg.data_max_attempts = j.value("data_max_attempts", cfg.data_max_attempts);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return cfg;
}

json to_json(const PipelineConfig& cfg) {
  json counts = json::object();
  for (const auto& [t, c] : cfg.counts) counts[std::string(chart_type_name(t))] = c;
  return json{
      {"master_seed", cfg.master_seed},
      {"counts", counts},
      {"qa",
       {{"mode", qa_mode_name(cfg.qa.mode)},
        {"k_template", cfg.qa.k_template},
        {"verify", cfg.qa.verify},
        {"drop_unverified", cfg.qa.drop_unverified}}},
      {"randomize_appearance", cfg.randomize_appearance},
      {"gateway", to_json(cfg.gateway)},
      {"output_dir", cfg.output_dir.string()},
      {"parallelism", cfg.parallelism},
      {"failure_threshold", cfg.failure_threshold},
      {"topic_batch_size", cfg.topic_batch_size},
      {"data_max_attempts", cfg.data_max_attempts},
  };
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IOFailure& e) {
    throw ConfigError(e.what());
  }
  const json j = json::parse(text, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return pipeline_config_from_json(j);
}

fs::path topic_pool_path(const fs::path& root, ChartType type) {
  return root / "topics" / (type_dir(type) + ".txt");
}
std::string image_rel_path(ChartType type, const std::string& id) {
  return "images/" + type_dir(type) + "/" + id + ".png";
}
std::string data_rel_path(ChartType type, const std::string& id) {
  return "data/" + type_dir(type) + "/" + id + ".json";
}
std::string appearance_rel_path(ChartType type, const std::string& id) {
  return "appearance/" + type_dir(type) + "/" + id + ".json";
}
std::string qa_rel_path(ChartType type, const std::string& id) {
  return "qa/" + type_dir(type) + "/" + id + ".jsonl";
}

TopicsResult cmd_topics(const PipelineConfig& cfg, std::shared_ptr<ChatBackend> backend) {
  cfg.validate();
  if (!backend) backend = default_backend(cfg.gateway);
  Gateway gateway(backend, cfg.gateway.max_concurrent_requests);
  TopicsResult out;
  for (ChartType t : kAllChartTypes) {
    const int want = cfg.count(t);
    if (want <= 0) continue;
    const fs::path path = topic_pool_path(cfg.output_dir, t);
    if (fs::exists(path)) {
      const auto existing = read_topic_pool(path);
      if (existing.size() >= std::size_t(want)) {
        out.pool_sizes[t] = existing.size();
        out.skipped.push_back(t);
        continue;
      }
    }
    TopicPoolOptions opts;
    opts.batch_size = cfg.topic_batch_size;
    TopicPool pool;
    try {
      pool = generate_topic_pool(t, std::size_t(want), gateway, opts);
    } catch (const GatewayExhausted& e) {
      throw GatewayExhausted("topic stage (" + std::string(chart_type_name(t)) + "): " + e.what());
    }
    write_topic_pool(pool.topics, path);
    out.pool_sizes[t] = pool.topics.size();
    out.queries += pool.query_count;
  }
  return out;
}

double GenerateResult::failure_rate() const {
  return requested ? double(failures.size()) / double(requested) : 0.0;
}

bool GenerateResult::over_threshold(double threshold) const { return failure_rate() > threshold; }

GenerateResult cmd_generate(const PipelineConfig& cfg, std::shared_ptr<ChatBackend> backend) {
  cfg.validate();
  const fs::path& root = cfg.output_dir;

  std::vector<FigureJob> jobs;
  std::size_t global = 0;
  for (std::size_t ti = 0; ti < kAllChartTypes.size(); ++ti) {
    const ChartType t = kAllChartTypes[ti];
    const int want = cfg.count(t);
    if (want <= 0) continue;
    const fs::path pool_path = topic_pool_path(root, t);
    if (!fs::exists(pool_path)) {
      throw StoreMissing("no topic pool at " + pool_path.string() + "; run the topics command first");
    }
    const auto pool = read_topic_pool(pool_path);
    if (pool.empty()) throw StoreMissing("topic pool " + pool_path.string() + " is empty");
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg.master_seed, ti, "topic-order"));
    shuffle_rng.shuffle(order);
    for (int i = 0; i < want; ++i, ++global) {
      FigureJob job;
      job.type = t;
      job.local = std::size_t(i);
      job.global = global;
      job.seeds = {derive_seed(cfg.master_seed, global, "topic"), derive_seed(cfg.master_seed, global, "data"),
                   derive_seed(cfg.master_seed, global, "appearance"), derive_seed(cfg.master_seed, global, "qa")};
      const std::size_t pick = job.local < order.size() ? order[job.local] : job.seeds.topic % pool.size();
      job.topic = pool[pick];
      jobs.push_back(std::move(job));
    }
  }

  write_file_atomic(root / std::string(kEffectiveConfigFile), to_json(cfg).dump(2) + "\n");

  if (!backend) backend = default_backend(cfg.gateway);
  Gateway gateway(backend, cfg.gateway.max_concurrent_requests);

  std::vector<FigureOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size() && !abort; i = next++) {
      try {
        outcomes[i] = run_figure(jobs[i], cfg, gateway);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::size_t(cfg.parallelism), std::max<std::size_t>(1, jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  GenerateResult result;
  result.requested = jobs.size();
  std::vector<FigureRecord> records;
  std::vector<json> rejections;
  for (auto& o : outcomes) {
    if (o.record) {
      ++result.produced;
      if (o.reused) ++result.reused;
      records.push_back(std::move(*o.record));
    }
    if (o.failure) {
      rejections.push_back(json{{"figure_id", o.failure->figure_id},
                                {"stage", o.failure->stage},
                                {"message", o.failure->message}});
      result.failures.push_back(std::move(*o.failure));
    }
  }
  write_manifest(records, root / std::string(kManifestFile));
  write_jsonl(rejections, root / std::string(kRejectionsFile));
  result.stats = compute_stats(records);
  write_file_atomic(root / std::string(kStatsFile), to_json(result.stats).dump(2) + "\n");
  return result;
}

DatasetStats cmd_stats(const fs::path& dataset_dir) {
  const auto loaded = load_manifest(dataset_dir / std::string(kManifestFile));
  if (!loaded.errors.empty()) {
    const auto& e = loaded.errors.front();
    throw ParseFailure("manifest line " + std::to_string(e.line) + ": " + e.message + " (" +
                       std::to_string(loaded.errors.size()) + " bad lines)");
  }
  DatasetStats stats = compute_stats(loaded.records);
  write_file_atomic(dataset_dir / std::string(kStatsFile), to_json(stats).dump(2) + "\n");
  return stats;
}

namespace {

std::optional<std::string> join_key(const json& row) {
  if (row.contains("id")) {
    const json& id = row.at("id");
    return id.is_string() ? id.get<std::string>() : id.dump();
  }
  if (row.contains("figure_id") && row.contains("question")) {
    return row.at("figure_id").get<std::string>() + '\x1f' + qa_key(row.at("question").get<std::string>());
  }
  return std::nullopt;
}

std::string answer_text(const json& row, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!row.contains(k)) continue;
    const json& v = row.at(k);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_number(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "Yes" : "No";
    return v.dump();
  }
  throw ParseFailure("row has no answer field");
}

}  // namespace

EvalReport cmd_eval(const fs::path& pred_path, const fs::path& gold_path, double tolerance,
                    std::size_t max_failures) {
  const auto preds = read_jsonl(pred_path);
  const auto golds = read_jsonl(gold_path);
  bool keyed = !golds.empty();
  for (const auto& g : golds) keyed = keyed && join_key(g).has_value();
  for (const auto& p : preds) keyed = keyed && join_key(p).has_value();

  std::map<std::string, std::string> by_key;
  if (keyed) {
    for (const auto& p : preds) by_key[*join_key(p)] = answer_text(p, {"answer", "pred", "prediction"});
  }
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const json& g = golds[i];
    EvalItem item;
    item.gold = answer_text(g, {"answer", "gold"});
    item.question = g.value("question", "");
    if (g.contains("qa_type") && g.at("qa_type").is_string()) item.qa_type = g.at("qa_type").get<std::string>();
    if (keyed) {
      const auto it = by_key.find(*join_key(g));
      item.pred = it == by_key.end() ? std::string() : it->second;
    } else if (i < preds.size()) {
      item.pred = answer_text(preds[i], {"answer", "pred", "prediction"});
    }
    items.push_back(std::move(item));
  }
  return evaluate(items, tolerance, max_failures);
}

std::map<std::string, std::size_t> cmd_export_training(const fs::path& dataset_dir, const fs::path& out_path,
                                                       const ExportOptions& options) {
  const auto loaded = load_manifest(dataset_dir / std::string(kManifestFile));
  if (!loaded.errors.empty()) {
    throw ParseFailure("manifest line " + std::to_string(loaded.errors.front().line) + ": " +
                       loaded.errors.front().message);
  }
  auto write = [&](std::span<const FigureRecord> records, const fs::path& path) {
    const auto examples = emit_training_examples(records, options.token, options.task, dataset_dir);
    std::vector<json> rows;
    for (const auto& e : examples) rows.push_back(to_json(e));
    write_jsonl(rows, path);
    return examples.size();
  };
  std::map<std::string, std::size_t> written;
  if (options.splits.empty()) {
    written[out_path.string()] = write(loaded.records, out_path);
    return written;
  }
  Rng rng(options.split_seed);
  for (const auto& split : split_dataset(loaded.records, options.splits, rng)) {
    const fs::path path =
        out_path.parent_path() / (out_path.stem().string() + "." + split.name + out_path.extension().string());
    written[path.string()] = write(split.records, path);
  }
  return written;
}

}  // namespace figsynth
