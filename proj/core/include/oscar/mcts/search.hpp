#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oscar/backend/backend.hpp"
#include "oscar/mcts/similarity.hpp"
#include "oscar/mcts/tree.hpp"
#include "oscar/rewards/rewards.hpp"

namespace oscar::mcts {

/// exp(logprob) / token_count^lambda for each candidate, renormalized to sum
/// to one. Computed in log space so tiny probabilities do not underflow.
std::vector<double> priors(const std::vector<CandidateSentence>& candidates,
                           double length_penalty);

/// Q + c_puct * prior * sqrt(N(s)) / (1 + N(s,a)).
double puct_score(double q, double prior, int parent_visits, int edge_visits, double c_puct);

/// Child of `node` maximizing the PUCT score; ties go to the earliest child.
/// Throws Error if the node has no children.
NodeId select_child(const SearchTree& tree, NodeId node);

/// Descends from the root by PUCT to an unexpanded or terminal node.
NodeId select_leaf(const SearchTree& tree);

/// Indices of the candidates kept by greedy filtering: a candidate survives
/// when its similarity to every previously kept one is below `threshold`.
std::vector<std::size_t> filter_similar(const std::vector<CandidateSentence>& candidates,
                                        double threshold, const SimilarityFn& similarity);

struct SearchOptions {
  rewards::RewardOptions rewards;
  SimilarityFn similarity = bow_cosine;
  rewards::RewardAuditLog* audit = nullptr;
  std::string tree_name;
  /// Called after every iteration (test hook).
  std::function<void(const SearchTree&)> after_iteration;
};

/// Requests K candidates (or `limit` if smaller), filters near-duplicates,
/// attaches survivors with priors and marks the leaf expanded. With no
/// survivors the leaf becomes terminal and unexpandable. Transport failures
/// also leave the leaf unexpandable.
std::vector<NodeId> expand(SearchTree& tree, NodeId leaf, backend::Backend& backend,
                           const SearchOptions& options = {}, int limit = 0);

/// Greedy rollout plus dual-granularity reward. Cached: a second call makes
/// no backend calls. Backend errors poison the node with value 0.
rewards::RewardRecord evaluate(SearchTree& tree, NodeId node, backend::Backend& backend,
                               const SearchOptions& options = {});

/// Walks leaf -> root updating N, r(s,a) = value(child) - value(parent),
/// Q = r + discount * V(child) and V(parent).
void backpropagate(SearchTree& tree, NodeId leaf);

/// Runs `budget` select/expand/evaluate/backpropagate iterations and makes
/// sure at least one complete trajectory exists.
SearchTree run_search(const SceneContext& ctx, const SearchConfig& config,
                      backend::Backend& backend, const SearchOptions& options = {});

}  // namespace oscar::mcts
