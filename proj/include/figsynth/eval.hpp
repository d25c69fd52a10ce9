#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace figsynth {

inline constexpr double kDefaultTolerance = 0.05;

// Trim and collapse internal whitespace runs to one space.
std::string normalize_answer(std::string_view text);

// Numeric reading of an answer: optional sign, optional leading '$',
// optional trailing '%', commas treated as thousands separators. Returns
// nullopt unless the whole (normalized) text is a number.
std::optional<double> parse_numeric(std::string_view text);

// Exact match with relative numeric tolerance. When both sides are numeric:
// |pred - gold| <= tolerance * |gold|, and gold == 0 demands pred == 0.
// Otherwise case-insensitive equality after normalization. Tolerance is
// relative to gold, so the relation is not symmetric.
bool relaxed_match(std::string_view pred, std::string_view gold,
                   double tolerance = kDefaultTolerance);

struct EvalItem {
  std::string pred;
  std::string gold;
  std::optional<std::string> qa_type;
  std::string question;
};

struct TypeScore {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvalFailure {
  std::string question;
  std::string pred;
  std::string gold;
};

struct EvalReport {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::map<std::string, TypeScore> per_type;
  std::vector<EvalFailure> failures;  // first `max_failures` misses
};

// Throws EmptyInput when `items` is empty.
EvalReport evaluate(std::span<const EvalItem> items, double tolerance = kDefaultTolerance,
                    std::size_t max_failures = 20);

nlohmann::json to_json(const EvalReport& report);

}  // namespace figsynth
