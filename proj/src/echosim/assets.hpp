#pragma once

#include <filesystem>
#include <string>

namespace echosim {

// Directory holding bundled topics, reason banks and prompt templates.
// ECHOSIM_ASSET_DIR in the environment overrides the build-time location.
std::filesystem::path asset_dir();

std::string read_text_file(const std::filesystem::path& path);

// Writes via a temporary sibling and rename so readers never see a torn file.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace echosim
