#pragma once

#include <nlohmann/json.hpp>

namespace oscar {

inline constexpr const char* kVersion = "1.0.0";

/// Version of every module, recorded in run manifests.
inline nlohmann::json module_versions() {
  nlohmann::json v;
  for (const char* m : {"core", "backend", "simulator", "rewards", "extraction", "mcts",
                        "preference", "dpo", "baseline", "cli"}) {
    v[m] = kVersion;
  }
  return v;
}

}  // namespace oscar
