#include "figsynth/topics.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "figsynth/errors.hpp"
#include "figsynth/io.hpp"

namespace figsynth {

namespace {

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string strip_marker(std::string line) {
  // "12." "12)" "12:" "#3"
  std::size_t i = 0;
  if (i < line.size() && line[i] == '#') ++i;
  const std::size_t digits_start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > digits_start && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
    return trim(std::string_view(line).substr(i + 1));
  }
  for (std::string_view bullet : {"- ", "* ", "\xE2\x80\xA2", "+ "}) {
    if (starts_with(line, bullet)) return trim(std::string_view(line).substr(bullet.size()));
  }
  return line;
}

std::string strip_quotes(std::string s) {
  for (bool changed = true; changed && !s.empty();) {
    changed = false;
    for (std::string_view q : {"\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D", "*"}) {
      if (starts_with(s, q)) {
        s = s.substr(q.size());
        changed = true;
      }
      if (s.size() >= q.size() && std::string_view(s).substr(s.size() - q.size()) == q) {
        s.resize(s.size() - q.size());
        changed = true;
      }
    }
    s = trim(s);
  }
  return s;
}

}  // namespace

ChatRequest build_topic_prompt(ChartType chart_type, int batch_size, int batch_index) {
  if (batch_size < 1 || batch_size > 100) {
    throw ConfigError("topic batch size must be in 1..100, got " + std::to_string(batch_size));
  }
  const std::string type_name(chart_type_name(chart_type));
  ChatRequest req;
  req.system = "You propose topics for data visualizations.\n" + stage_marker(StageTag::Topic) +
               "\n#chart-type:" + type_name + "\n#count:" + std::to_string(batch_size);
  std::ostringstream user;
  user << "List " << batch_size << (batch_size == 1 ? " topic" : " distinct topics")
       << " that would be shown well as a " << type_name << " chart ("
       << chart_type_description(chart_type) << ")\n"
       << "Each topic is one short line describing what the figure shows, for example "
          "\"Coffee sales by region in 2021\".\n"
       << "Number the topics 1 to " << batch_size << ", one per line, with no other text.";
  if (batch_index > 0) {
    user << "\nThis is batch " << batch_index + 1
         << " of an ongoing collection; vary the subject areas so topics do not repeat.";
  }
  req.user = user.str();
  req.temperature = 1.0;
  req.max_tokens = 40 * batch_size + 64;
  return req;
}

std::vector<std::string> parse_topics(std::string_view response) {
  std::vector<std::string> out;
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    std::string t = strip_quotes(strip_marker(trim(line)));
    if (t.empty() || t.back() == ':') continue;
    const std::size_t len = utf8_length(t);
    if (len < kMinTopicLength || len > kMaxTopicLength) continue;
    out.push_back(std::move(t));
  }
  return out;
}

std::string normalize_topic(std::string_view topic) {
  std::string out;
  bool pending_space = false;
  for (char c : topic) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(u));
  }
  while (!out.empty() && (std::ispunct(static_cast<unsigned char>(out.back())) || out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

std::vector<std::string> dedup_topics(const std::vector<std::string>& topics) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : topics) {
    if (seen.insert(normalize_topic(t)).second) out.push_back(t);
  }
  return out;
}

TopicPool generate_topic_pool(ChartType chart_type, std::size_t target_count, Gateway& gateway,
                              const TopicPoolOptions& options) {
  if (target_count < 1) throw ConfigError("topic target must be >= 1");
  const int batch = options.batch_size;
  const int budget = options.query_budget.value_or(
      10 * static_cast<int>((target_count + static_cast<std::size_t>(batch) - 1) /
                            static_cast<std::size_t>(batch)));
  TopicPool pool;
  pool.chart_type = chart_type;
  std::set<std::string> seen;
  while (pool.topics.size() < target_count && pool.query_count < budget) {
    const ChatRequest req = build_topic_prompt(chart_type, batch, pool.query_count);
    ++pool.query_count;
    std::string text;
    try {
      text = gateway.complete(req).text;
    } catch (const GatewayExhausted&) {
      if (pool.topics.empty()) throw;
      break;
    }
    for (auto& topic : parse_topics(text)) {
      if (seen.insert(normalize_topic(topic)).second) {
        pool.topics.push_back(std::move(topic));
      } else {
        ++pool.duplicates_dropped;
      }
    }
  }
  return pool;
}

void write_topic_pool(const std::vector<std::string>& topics, const std::filesystem::path& path) {
  std::string body;
  for (const auto& t : topics) {
    body += t;
    body += '\n';
  }
  write_file_atomic(path, body);
}

std::vector<std::string> read_topic_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOFailure("cannot read topic pool " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace figsynth
