#include "figsynth/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "figsynth/assets.hpp"
#include "figsynth/errors.hpp"

#ifndef FIGSYNTH_DEFAULT_ASSET_DIR
#define FIGSYNTH_DEFAULT_ASSET_DIR "assets"
#endif

namespace figsynth {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IOFailure("cannot create " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOFailure("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IOFailure("short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IOFailure("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOFailure("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

fs::path& asset_override() {
  static fs::path dir;
  return dir;
}

}  // namespace

fs::path asset_dir() {
  if (!asset_override().empty()) return asset_override();
  if (const char* env = std::getenv("FIGSYNTH_ASSET_DIR"); env && *env) return env;
  return FIGSYNTH_DEFAULT_ASSET_DIR;
}

void set_asset_dir(const fs::path& dir) { asset_override() = dir; }

}  // namespace figsynth
