#include "figsynth/eval.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "figsynth/errors.hpp"

namespace figsynth {

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::optional<double> parse_numeric(std::string_view text) {
  std::string s = normalize_answer(text);
  std::string sign;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    sign = s.substr(0, 1);
    s.erase(0, 1);
  }
  if (!s.empty() && s[0] == '$') s.erase(0, 1);
  if (!s.empty() && s.back() == '%') s.pop_back();
  std::string digits = sign;
  for (char c : s) {
    if (c == ',') continue;
    if (c == ' ') return std::nullopt;
    digits += c;
  }
  if (digits.empty() || digits == "-" || digits == "+") return std::nullopt;
  // Only plain decimal notation: strtod would also accept "inf", "nan", hex.
  for (char c : digits) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' ||
          c == 'e' || c == 'E')) {
      return std::nullopt;
    }
  }
  char* end = nullptr;
  const double value = std::strtod(digits.c_str(), &end);
  if (end == digits.c_str() || *end != '\0' || !std::isfinite(value)) return std::nullopt;
  return value;
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

bool relaxed_match(std::string_view pred, std::string_view gold, double tolerance) {
  const auto p = parse_numeric(pred);
  const auto g = parse_numeric(gold);
  if (p && g) {
    if (*g == 0.0) return *p == 0.0;
    return std::fabs(*p - *g) <= tolerance * std::fabs(*g);
  }
  return lower(normalize_answer(pred)) == lower(normalize_answer(gold));
}

EvalReport evaluate(std::span<const EvalItem> items, double tolerance, std::size_t max_failures) {
  if (items.empty()) throw EmptyInput("evaluate needs at least one prediction");
  EvalReport report;
  for (const EvalItem& item : items) {
    const bool ok = relaxed_match(item.pred, item.gold, tolerance);
    ++report.n;
    if (ok) ++report.correct;
    if (item.qa_type) {
      TypeScore& score = report.per_type[*item.qa_type];
      ++score.n;
      if (ok) ++score.correct;
    }
    if (!ok && report.failures.size() < max_failures) {
      report.failures.push_back({item.question, item.pred, item.gold});
    }
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.n);
  for (auto& [type, score] : report.per_type) {
    score.accuracy = static_cast<double>(score.correct) / static_cast<double>(score.n);
  }
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, score] : report.per_type) {
    per_type[type] = {{"n", score.n}, {"correct", score.correct}, {"accuracy", score.accuracy}};
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"question", f.question}, {"pred", f.pred}, {"gold", f.gold}});
  }
  return {{"n", report.n},
          {"correct", report.correct},
          {"accuracy", report.accuracy},
          {"per_qa_type", std::move(per_type)},
          {"failures", std::move(failures)}};
}

}  // namespace figsynth
