#include "run_dir.hpp"

#include <fstream>

#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/version.hpp"

namespace oscar::cli {

using nlohmann::json;

RunDir::RunDir(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void RunDir::write(const std::string& relative, std::string_view contents) {
  write_file(root_ / relative, contents);
  track(relative);
}

void RunDir::track(const std::string& relative) {
  for (const auto& o : outputs_) {
    if (o == relative) return;
  }
  outputs_.push_back(relative);
}

void RunDir::log(json event) {
  std::ofstream out(root_ / "log.jsonl", std::ios::binary | std::ios::app);
  out << event.dump() << '\n';
  if (!out) throw Error("cannot append to log.jsonl");
}

void RunDir::commit(const std::string& command, json config, const std::string& backend) {
  const auto path = root_ / "manifest.json";
  json manifest{{"format", "oscar.manifest/1"}, {"stages", json::array()}};
  if (std::filesystem::exists(path)) {
    manifest = json::parse(read_file(path), nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("stages")) {
      throw Error("existing manifest.json is unreadable");
    }
  }
  track("log.jsonl");
  json outputs = json::array();
  for (const auto& rel : outputs_) {
    if (!std::filesystem::exists(root_ / rel)) continue;
    outputs.push_back(json{{"path", rel}, {"sha256", sha256_file(root_ / rel)}});
  }
  manifest["stages"].push_back(json{{"command", command},
                                    {"config", std::move(config)},
                                    {"backend", backend},
                                    {"versions", module_versions()},
                                    {"outputs", std::move(outputs)}});
  write_file(path, manifest.dump(2) + "\n");
}

}  // namespace oscar::cli
