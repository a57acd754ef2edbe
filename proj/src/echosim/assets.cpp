#include "echosim/assets.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "echosim/errors.hpp"

#ifndef ECHOSIM_DEFAULT_ASSET_DIR
#define ECHOSIM_DEFAULT_ASSET_DIR "assets"
#endif

namespace echosim {

std::filesystem::path asset_dir() {
  if (const char* env = std::getenv("ECHOSIM_ASSET_DIR"); env && *env) return env;
  return ECHOSIM_DEFAULT_ASSET_DIR;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace echosim
