#include "figsynth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "figsynth/errors.hpp"
#include "figsynth/io.hpp"

namespace figsynth {

using nlohmann::json;

std::string make_figure_id(ChartType type, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(chart_type_name(type)) + "-" + buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const FigureRecord& r) {
  json qa = json::array();
  for (const auto& q : r.qa) qa.push_back(to_json(q));
  return json{
      {"figure_id", r.figure_id},
      {"chart_type", chart_type_name(r.chart_type)},
      {"topic", r.topic},
      {"image_path", r.image_path},
      {"data_path", r.data_path},
      {"appearance_path", r.appearance_path},
      {"qa", std::move(qa)},
      {"seeds",
       {{"topic", r.seeds.topic}, {"data", r.seeds.data}, {"appearance", r.seeds.appearance}, {"qa", r.seeds.qa}}},
      {"content_hash", hash_hex(r.content_hash)},
  };
}

FigureRecord figure_record_from_json(const json& j) {
  try {
    FigureRecord r;
    r.figure_id = j.at("figure_id").get<std::string>();
    const auto type = chart_type_from_name(j.at("chart_type").get<std::string>());
    if (!type) throw ParseFailure("unknown chart_type");
    r.chart_type = *type;
    r.topic = j.at("topic").get<std::string>();
    r.image_path = j.at("image_path").get<std::string>();
    r.data_path = j.at("data_path").get<std::string>();
    r.appearance_path = j.at("appearance_path").get<std::string>();
    for (const auto& q : j.at("qa")) r.qa.push_back(qa_pair_from_json(q));
    const auto& s = j.at("seeds");
    r.seeds = {s.at("topic").get<std::uint64_t>(), s.at("data").get<std::uint64_t>(),
               s.at("appearance").get<std::uint64_t>(), s.at("qa").get<std::uint64_t>()};
    const std::string hash = j.at("content_hash").get<std::string>();
    std::size_t used = 0;
    r.content_hash = std::stoull(hash, &used, 16);
    if (used != hash.size()) throw ParseFailure("bad content_hash");
    return r;
  } catch (const json::exception& e) {
    throw ParseFailure(std::string("bad figure record: ") + e.what());
  } catch (const std::logic_error&) {
    throw ParseFailure("bad content_hash");
  }
}

std::size_t write_manifest(std::span<const FigureRecord> records, const std::filesystem::path& path) {
  std::set<std::string_view> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.figure_id).second) throw DuplicateId("duplicate figure_id " + r.figure_id);
  }
  std::string out;
  for (const auto& r : records) {
    out += dump_canonical(to_json(r));
    out += '\n';
  }
  write_file_atomic(path, out);
  return records.size();
}

ManifestLoad load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ManifestLoad out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(figure_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      out.errors.push_back({n, e.what()});
    } catch (const ParseFailure& e) {
      out.errors.push_back({n, e.what()});
    }
  }
  return out;
}

DatasetStats compute_stats(std::span<const FigureRecord> records) {
  DatasetStats s;
  s.figure_count = records.size();
  for (const auto& r : records) {
    ++s.per_chart_type[std::string(chart_type_name(r.chart_type))];
    for (const auto& q : r.qa) {
      ++s.qa_count;
      ++s.per_qa_type[q.qa_type];
      if (q.source == QaSource::Llm) {
        ++s.llm_qa_count;
        if (q.verified) ++s.llm_qa_verified;
      }
    }
  }
  s.qa_per_figure = s.figure_count ? double(s.qa_count) / double(s.figure_count) : 0.0;
  s.llm_qa_verification_pass_rate =
      s.llm_qa_count ? double(s.llm_qa_verified) / double(s.llm_qa_count) : 1.0;
  return s;
}

json to_json(const DatasetStats& s) {
  return json{
      {"figure_count", s.figure_count},
      {"qa_count", s.qa_count},
      {"qa_per_figure", s.qa_per_figure},
      {"per_chart_type", s.per_chart_type},
      {"per_qa_type", s.per_qa_type},
      {"llm_qa_count", s.llm_qa_count},
      {"llm_qa_verified", s.llm_qa_verified},
      {"llm_qa_verification_pass_rate", s.llm_qa_verification_pass_rate},
  };
}

std::vector<NamedSplit> split_dataset(std::span<const FigureRecord> records,
                                      std::span<const SplitSpec> fractions, Rng& rng) {
  if (fractions.empty()) throw BadFractions("no splits given");
  double sum = 0;
  std::set<std::string> names;
  for (const auto& f : fractions) {
    if (!(f.fraction >= 0) || !std::isfinite(f.fraction)) throw BadFractions("negative fraction for " + f.name);
    if (!names.insert(f.name).second) throw BadFractions("duplicate split name " + f.name);
    sum += f.fraction;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw BadFractions("fractions must sum to 1");

  const std::size_t k = fractions.size();
  std::vector<std::vector<std::size_t>> members(k);
  std::vector<double> assigned(k, 0.0);
  double processed = 0;
  for (ChartType type : kAllChartTypes) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].chart_type == type) idx.push_back(i);
    }
    if (idx.empty()) continue;
    rng.shuffle(idx);
    const double n = double(idx.size());
    processed += n;
    std::vector<std::size_t> take(k);
    std::size_t given = 0;
    for (std::size_t s = 0; s < k; ++s) {
      take[s] = static_cast<std::size_t>(std::floor(fractions[s].fraction * n + 1e-9));
      given += take[s];
    }
    // Leftovers go to the splits furthest behind their global target.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = fractions[a].fraction * processed - (assigned[a] + double(take[a]));
      const double db = fractions[b].fraction * processed - (assigned[b] + double(take[b]));
      return da > db;
    });
    for (std::size_t r = 0; given < idx.size(); ++r) {
      const std::size_t s = order[r % k];
      if (fractions[s].fraction == 0.0) continue;
      ++take[s];
      ++given;
    }
    std::size_t pos = 0;
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t c = 0; c < take[s]; ++c) members[s].push_back(idx[pos++]);
      assigned[s] += double(take[s]);
    }
  }
  std::vector<NamedSplit> out;
  for (std::size_t s = 0; s < k; ++s) {
    std::sort(members[s].begin(), members[s].end());
    NamedSplit split{fractions[s].name, {}};
    for (std::size_t i : members[s]) split.records.push_back(records[i]);
    out.push_back(std::move(split));
  }
  return out;
}

std::string_view prompt_token_name(PromptToken token) {
  switch (token) {
    case PromptToken::ChartQa:
      return "chartqa";
    case PromptToken::SyntheticQa:
      return "synthetic_qa";
    case PromptToken::Both:
      return "both";
  }
  return "chartqa";
}

std::optional<PromptToken> prompt_token_from_name(std::string_view name) {
  for (PromptToken t : {PromptToken::ChartQa, PromptToken::SyntheticQa, PromptToken::Both}) {
    if (prompt_token_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string format_prompt(PromptToken token, std::string_view question) {
  std::string out;
  switch (token) {
    case PromptToken::ChartQa:
      out = std::string(kChartQaToken);
      break;
    case PromptToken::SyntheticQa:
      out = std::string(kSyntheticQaToken);
      break;
    case PromptToken::Both:
      out = std::string(kChartQaToken) + " " + std::string(kSyntheticQaToken);
      break;
  }
  out += ' ';
  out += question;
  out += ' ';
  out += kAnswerToken;
  return out;
}

std::vector<TrainingExample> emit_training_examples(std::span<const FigureRecord> records,
                                                    PromptToken token, TrainingTask task,
                                                    const std::filesystem::path& root) {
  std::vector<TrainingExample> out;
  for (const auto& r : records) {
    if (task == TrainingTask::JsonParse) {
      const ChartData data = chart_data_from_json(json::parse(read_file(root / r.data_path)));
      out.push_back({r.image_path, std::string(kJsonParseToken), canonical_json(data)});
      continue;
    }
    for (const auto& q : r.qa) out.push_back({r.image_path, format_prompt(token, q.question), q.answer});
  }
  return out;
}

json to_json(const TrainingExample& e) {
  return json{{"image_path", e.image_path}, {"input_text", e.input_text}, {"target_text", e.target_text}};
}

void write_jsonl(const std::vector<json>& rows, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : rows) {
    out += dump_canonical(r);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace figsynth
