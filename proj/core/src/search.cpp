#include "oscar/mcts/search.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "oscar/core/rng.hpp"
#include "oscar/core/text.hpp"

namespace oscar::mcts {

std::vector<double> priors(const std::vector<CandidateSentence>& candidates,
                           double length_penalty) {
  std::vector<double> logw;
  logw.reserve(candidates.size());
  for (const auto& c : candidates) {
    const int tokens = std::max(1, c.token_count);
    logw.push_back(c.logprob - length_penalty * std::log(static_cast<double>(tokens)));
  }
  if (logw.empty()) return {};
  const double hi = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(hi)) {
    return std::vector<double>(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
  }
  double total = 0.0;
  for (auto& w : logw) {
    w = std::isfinite(w) ? std::exp(w - hi) : 0.0;
    total += w;
  }
  for (auto& w : logw) w /= total;
  return logw;
}

double puct_score(double q, double prior, int parent_visits, int edge_visits, double c_puct) {
  return q + c_puct * prior * std::sqrt(static_cast<double>(parent_visits)) /
                 (1.0 + static_cast<double>(edge_visits));
}

NodeId select_child(const SearchTree& tree, NodeId node) {
  const auto& n = tree.node(node);
  if (n.children.empty()) throw Error("select_child: node has no children");
  NodeId best = n.children.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (NodeId c : n.children) {
    const auto& child = tree.node(c);
    const double s =
        puct_score(child.q, child.prior, n.visits, child.edge_visits, tree.config().c_puct);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

NodeId select_leaf(const SearchTree& tree) {
  NodeId id = tree.root();
  while (tree.node(id).expanded && !tree.node(id).terminal && !tree.node(id).children.empty()) {
    id = select_child(tree, id);
  }
  return id;
}

std::vector<std::size_t> filter_similar(const std::vector<CandidateSentence>& candidates,
                                        double threshold, const SimilarityFn& similarity) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (trim(candidates[i].text).empty()) continue;
    bool distinct = true;
    for (std::size_t j : kept) {
      if (similarity(candidates[i].text, candidates[j].text) >= threshold) {
        distinct = false;
        break;
      }
    }
    if (distinct) kept.push_back(i);
  }
  return kept;
}

std::vector<NodeId> expand(SearchTree& tree, NodeId leaf, backend::Backend& backend,
                           const SearchOptions& options, int limit) {
  const auto& cfg = tree.config();
  int k = cfg.expansion_width;
  if (limit > 0) k = std::min(k, limit);

  std::vector<CandidateSentence> candidates;
  const std::string prefix = tree.node(leaf).text;
  const auto seed = derive_seed(cfg.seed, {fnv1a64(tree.context().image_ref),
                                           fnv1a64(prefix), static_cast<std::uint64_t>(leaf)});
  try {
    candidates = backend.generate_candidates(tree.context(), prefix, k, cfg.temperature, seed);
  } catch (const Error&) {
    candidates.clear();
  }
  if (static_cast<int>(candidates.size()) > k) candidates.resize(static_cast<std::size_t>(k));

  const auto& similarity = options.similarity ? options.similarity : SimilarityFn{bow_cosine};
  const auto kept_index = filter_similar(candidates, cfg.sim_threshold, similarity);
  std::vector<CandidateSentence> kept;
  kept.reserve(kept_index.size());
  for (auto i : kept_index) {
    auto c = candidates[i];
    c.text = trim(c.text);
    kept.push_back(std::move(c));
  }

  auto& node = tree.node(leaf);
  node.expanded = true;
  if (kept.empty()) {
    node.unexpandable = true;
    node.terminal = true;
    return {};
  }
  const auto p = priors(kept, cfg.length_penalty);
  std::vector<NodeId> ids;
  ids.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) ids.push_back(tree.add_child(leaf, kept[i], p[i]));
  return ids;
}

namespace {

struct Evaluation {
  rewards::RewardRecord reward;
  std::string rollout;
  bool failed = false;
};

Evaluation compute_evaluation(const SceneContext& ctx, const SearchNode& node, int max_depth,
                              backend::Backend& backend, const rewards::RewardOptions& options) {
  Evaluation e;
  try {
    e.rollout = node.complete ? node.text : backend.greedy_rollout(ctx, node.text, max_depth);
    e.reward = rewards::node_value(ctx, node.sentence.text, e.rollout, backend, options);
  } catch (const Error&) {
    e.failed = true;
    e.reward = rewards::RewardRecord{};
  }
  return e;
}

void apply_evaluation(SearchTree& tree, NodeId id, Evaluation e, const SearchOptions& options) {
  auto& node = tree.node(id);
  node.reward = e.reward;
  node.rollout = std::move(e.rollout);
  node.poisoned = e.failed;
  ++tree.node_evaluations;
  if (e.failed) ++tree.failed_evaluations;
  if (options.audit != nullptr) options.audit->record(options.tree_name, id, node.sentence.text, e.reward);
}

}  // namespace

rewards::RewardRecord evaluate(SearchTree& tree, NodeId id, backend::Backend& backend,
                               const SearchOptions& options) {
  if (id == tree.root()) return rewards::RewardRecord{};
  if (tree.node(id).evaluated()) return *tree.node(id).reward;
  apply_evaluation(tree, id,
                   compute_evaluation(tree.context(), tree.node(id), tree.config().max_depth,
                                      backend, options.rewards),
                   options);
  return *tree.node(id).reward;
}

void backpropagate(SearchTree& tree, NodeId leaf) {
  const double gamma = tree.config().discount;
  NodeId c = leaf;
  tree.node(c).visits += 1;
  while (c != tree.root()) {
    const NodeId p = tree.node(c).parent;
    auto& child = tree.node(c);
    child.edge_visits += 1;
    child.edge_reward = tree.value_of(c) - tree.value_of(p);
    child.q = child.edge_reward + gamma * child.v;
    tree.node(p).visits += 1;
    tree.node(p).v = weighted_child_mean(tree, p);
    c = p;
  }
}

namespace {

void evaluate_children(SearchTree& tree, const std::vector<NodeId>& ids,
                       backend::Backend& backend, const SearchOptions& options) {
  if (ids.size() > 1 && backend.prefers_parallel_evaluation()) {
    std::vector<std::future<Evaluation>> futures;
    futures.reserve(ids.size());
    for (NodeId id : ids) {
      futures.push_back(std::async(std::launch::async, compute_evaluation,
                                   std::cref(tree.context()), tree.node(id),
                                   tree.config().max_depth, std::ref(backend),
                                   std::cref(options.rewards)));
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      apply_evaluation(tree, ids[i], futures[i].get(), options);
    }
  } else {
    for (NodeId id : ids) evaluate(tree, id, backend, options);
  }
  for (NodeId id : ids) backpropagate(tree, id);
}

// Deepest node reached by following the highest-Q visited child from the root.
NodeId best_partial_leaf(const SearchTree& tree) {
  NodeId id = tree.root();
  for (;;) {
    const auto& n = tree.node(id);
    NodeId best = kNoNode;
    double best_q = -std::numeric_limits<double>::infinity();
    for (NodeId c : n.children) {
      const auto& child = tree.node(c);
      if (!child.evaluated() || child.poisoned) continue;
      if (child.q > best_q) {
        best_q = child.q;
        best = c;
      }
    }
    if (best == kNoNode) return id;
    id = best;
  }
}

void force_completion(SearchTree& tree, backend::Backend& backend,
                      const SearchOptions& options) {
  const NodeId start = best_partial_leaf(tree);
  if (start == tree.root()) return;
  auto& leaf = tree.node(start);
  std::string rollout = leaf.rollout;
  if (rollout.empty()) {
    try {
      rollout = backend.greedy_rollout(tree.context(), leaf.text, tree.config().max_depth);
    } catch (const Error&) {
      return;
    }
  }
  const auto have = split_sentence_texts(leaf.text).size();
  const auto all = split_sentence_texts(rollout);
  if (all.size() <= have) {
    tree.node(start).complete = true;
    tree.node(start).terminal = true;
    return;
  }
  NodeId parent = start;
  for (std::size_t i = have; i < all.size(); ++i) {
    if (tree.node(parent).depth >= tree.config().max_depth) break;
    CandidateSentence c;
    c.text = all[i];
    c.token_count = std::max(1, whitespace_token_count(all[i]));
    c.logprob_available = false;
    c.end_of_response = i + 1 == all.size();
    tree.node(parent).expanded = true;
    const NodeId id = tree.add_child(parent, c, 1.0);
    tree.node(id).forced = true;
    evaluate(tree, id, backend, options);
    backpropagate(tree, id);
    parent = id;
  }
  tree.node(parent).complete = true;
  tree.node(parent).terminal = true;
}

}  // namespace

SearchTree run_search(const SceneContext& ctx, const SearchConfig& config,
                      backend::Backend& backend, const SearchOptions& options) {
  config.validate();
  SearchTree tree(ctx, config);
  const int eval_budget = config.eval_budget;

  for (int it = 0; it < config.budget; ++it) {
    const NodeId leaf = select_leaf(tree);
    auto& node = tree.node(leaf);
    if (node.terminal || node.expanded) {
      if (leaf == tree.root()) break;
      backpropagate(tree, leaf);
    } else {
      int limit = 0;
      if (eval_budget > 0) {
        limit = eval_budget - tree.node_evaluations;
        if (limit <= 0) break;
      }
      const auto children = expand(tree, leaf, backend, options, limit);
      if (children.empty()) {
        if (leaf == tree.root()) break;
        backpropagate(tree, leaf);
      } else {
        evaluate_children(tree, children, backend, options);
      }
    }
    ++tree.iterations;
    if (options.after_iteration) options.after_iteration(tree);
  }

  if (tree.node_evaluations == tree.failed_evaluations) {
    throw SearchError("search produced no evaluated node for " + ctx.image_ref,
                      std::make_shared<const SearchTree>(tree));
  }
  if (complete_leaves(tree).empty()) force_completion(tree, backend, options);
  return tree;
}

}  // namespace oscar::mcts
