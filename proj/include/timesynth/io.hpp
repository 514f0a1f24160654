#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace timesynth::io {

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file. Parent directories are created.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

// Shortest-round-trip-safe decimal form ("%.17g").
std::string format_double(double value);

}  // namespace timesynth::io
