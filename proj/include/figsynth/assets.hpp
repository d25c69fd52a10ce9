#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace figsynth {

// JSON assets compiled into the library (few-shot exemplars, QA exemplar bank).
// Returns an empty view when `name` is unknown.
std::string_view embedded_asset(std::string_view name);

// Directory holding runtime assets (fonts). Resolution order: the last value
// passed to set_asset_dir(), then $FIGSYNTH_ASSET_DIR, then the build-time
// source location.
std::filesystem::path asset_dir();
void set_asset_dir(const std::filesystem::path& dir);

}  // namespace figsynth
