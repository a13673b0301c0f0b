#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace consearch {

// Whole-file read; throws IngestError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes via a temporary sibling and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace consearch
