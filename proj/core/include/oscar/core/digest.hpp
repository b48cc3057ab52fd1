#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace oscar {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace oscar
