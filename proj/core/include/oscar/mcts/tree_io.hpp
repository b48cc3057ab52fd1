#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "oscar/mcts/tree.hpp"

namespace oscar::mcts {

nlohmann::json config_to_json(const SearchConfig& config);
SearchConfig config_from_json(const nlohmann::json& j);

nlohmann::json context_to_json(const SceneContext& ctx);
SceneContext context_from_json(const nlohmann::json& j);

/// Full dump: context, config, counters and per-node statistics, reward
/// records and rollout texts.
nlohmann::json tree_to_json(const SearchTree& tree);
SearchTree tree_from_json(const nlohmann::json& j);

/// SHA-256 of the canonical (sorted-key, compact) dump.
std::string tree_digest(const SearchTree& tree);

}  // namespace oscar::mcts
