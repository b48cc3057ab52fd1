#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace oscar::cli {

/// Output directory of one run: tracked files, a JSON Lines event log and an
/// append-only manifest with one entry per stage.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Writes `contents` to root/relative and tracks it for the manifest.
  void write(const std::string& relative, std::string_view contents);
  /// Tracks a file some other writer produced under root.
  void track(const std::string& relative);

  void log(nlohmann::json event);

  /// Appends the stage entry to manifest.json.
  void commit(const std::string& command, nlohmann::json config, const std::string& backend);

 private:
  std::filesystem::path root_;
  std::vector<std::string> outputs_;
};

}  // namespace oscar::cli
