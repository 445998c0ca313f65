#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rb {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents; throws IoError when unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Whole-file read; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Whole-file write (truncating); throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace rb
