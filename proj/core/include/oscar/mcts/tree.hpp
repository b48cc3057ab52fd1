#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oscar/core/errors.hpp"
#include "oscar/core/types.hpp"
#include "oscar/rewards/rewards.hpp"

namespace oscar::mcts {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// One sentence-level state. Edge statistics (prior, N(s,a), Q(s,a), r(s,a))
/// live on the child end of the edge.
struct SearchNode {
  NodeId id = 0;
  NodeId parent = kNoNode;
  int depth = 0;
  std::vector<NodeId> children;

  Sentence sentence;  // the action a leading into this state; empty at the root
  std::string text;   // full partial response up to and including `sentence`
  bool logprob_available = true;

  double prior = 0.0;        // p(a|s)
  int visits = 0;            // N(s)
  int edge_visits = 0;       // N(parent, a)
  double q = 0.0;            // Q(parent, a)
  double edge_reward = 0.0;  // r(parent, a)
  double v = 0.0;            // V(s)

  std::optional<rewards::RewardRecord> reward;
  std::string rollout;

  bool expanded = false;
  bool terminal = false;      // never expanded further
  bool complete = false;      // end marker seen or max depth reached
  bool poisoned = false;      // evaluation failed; excluded from preference data
  bool unexpandable = false;  // expansion produced no usable candidate
  bool forced = false;        // added by the greedy completion fallback

  bool evaluated() const { return reward.has_value(); }
};

/// Arena of nodes rooted at id 0. Single-writer.
class SearchTree {
 public:
  SearchTree(SceneContext context, SearchConfig config);

  NodeId root() const { return 0; }
  const SearchNode& node(NodeId id) const { return nodes_.at(id); }
  SearchNode& node(NodeId id) { return nodes_.at(id); }
  const std::vector<SearchNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  const SceneContext& context() const { return context_; }
  const SearchConfig& config() const { return config_; }

  /// Appends a child state for `candidate` under `parent`.
  NodeId add_child(NodeId parent, const CandidateSentence& candidate, double prior);

  /// value(s): the node's dual-granularity value, 0 for the root and for
  /// nodes not yet evaluated.
  double value_of(NodeId id) const;

  /// Root-exclusive path of node ids ending at `leaf`.
  std::vector<NodeId> path_to(NodeId leaf) const;

  /// True if `id` or any ancestor is poisoned.
  bool tainted(NodeId id) const;

  int node_evaluations = 0;
  int failed_evaluations = 0;
  int iterations = 0;

  /// Used by the JSON loader only.
  std::vector<SearchNode>& mutable_nodes() { return nodes_; }

 private:
  SceneContext context_;
  SearchConfig config_;
  std::vector<SearchNode> nodes_;
};

/// Raised when no node could be evaluated at all. Carries the partial tree.
class SearchError : public Error {
 public:
  SearchError(const std::string& what, std::shared_ptr<const SearchTree> partial)
      : Error(what), partial_(std::move(partial)) {}

  const SearchTree& partial_tree() const { return *partial_; }

 private:
  std::shared_ptr<const SearchTree> partial_;
};

/// Visit-weighted mean of child Q-values; 0 without visited children.
double weighted_child_mean(const SearchTree& tree, NodeId id);

/// Human-readable descriptions of every violated structural invariant:
/// visit conservation, V-consistency (tolerance), finite Q, acyclicity and
/// the depth bound.
std::vector<std::string> check_invariants(const SearchTree& tree, double tolerance = 1e-9);

/// Leaves of complete, non-poisoned trajectories, in id order.
std::vector<NodeId> complete_leaves(const SearchTree& tree);

/// Path score of the trajectory ending at `leaf` under `mode`.
double path_score(const SearchTree& tree, NodeId leaf, PathScore mode);

Trajectory trajectory(const SearchTree& tree, NodeId leaf);

}  // namespace oscar::mcts
