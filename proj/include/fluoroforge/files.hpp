#pragma once

#include <filesystem>
#include <string_view>

namespace fluoroforge {

// Writes to a temporary sibling, flushes, then renames over `path`, so
// readers see either the old file or the complete new one.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace fluoroforge
