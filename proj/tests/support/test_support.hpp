#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "figsynth/chart_model.hpp"
#include "figsynth/rng.hpp"
#include "figsynth/synthetic.hpp"

namespace figsynth::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "figsynth") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ChartData fuzz_data(ChartType type, std::uint64_t seed) {
  Rng rng(seed);
  return random_chart_data(type, rng, random_topic(rng));
}

inline ChartData simple_bar() {
  ChartData d;
  d.chart_type = ChartType::VBar;
  d.title = "Fruit sales";
  d.x_label = "Fruit";
  d.y_label = "Units";
  d.topic = "fruit sales";
  d.series.push_back({"Sales", "#1f77b4",
                      {{"Apple", std::nullopt, 40, std::nullopt},
                       {"Banana", std::nullopt, 25.5, std::nullopt},
                       {"Cherry", std::nullopt, 60, std::nullopt}}});
  return d;
}

}  // namespace figsynth::testing
