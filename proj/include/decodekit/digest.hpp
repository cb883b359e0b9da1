#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace decodekit {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace decodekit
