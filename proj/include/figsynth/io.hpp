#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace figsynth {

// Writes to a sibling temp file, then renames over `path`. Parent directories
// are created. Throws IOFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace figsynth
