#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "oscar/core/types.hpp"

namespace oscar {

/// Flat `key = value` document. Blank lines and lines starting with '#' are
/// ignored. Keys keep their file order only for error messages.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  /// Removes and returns a value so callers can detect leftover (unknown) keys.
  std::optional<std::string> take(const std::string& key);

  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(std::string_view key, std::string_view value);
std::int64_t parse_int(std::string_view key, std::string_view value);
std::uint64_t parse_uint64(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);

/// Moves every SearchConfig key out of `kv` into `config`. Keys are exactly
/// the field names of SearchConfig.
void take_search_config(KeyValueConfig& kv, SearchConfig& config);

/// Renders SearchConfig as key-value text using the field names.
std::map<std::string, std::string> search_config_entries(const SearchConfig& config);

}  // namespace oscar
