#include "oscar/mcts/tree.hpp"

#include <cmath>
#include <sstream>

#include "oscar/core/text.hpp"

namespace oscar::mcts {

SearchTree::SearchTree(SceneContext context, SearchConfig config)
    : context_(std::move(context)), config_(config) {
  SearchNode root;
  root.id = 0;
  root.visits = 1;
  root.prior = 1.0;
  nodes_.push_back(std::move(root));
}

NodeId SearchTree::add_child(NodeId parent, const CandidateSentence& candidate, double prior) {
  const auto id = static_cast<NodeId>(nodes_.size());
  SearchNode child;
  child.id = id;
  child.parent = parent;
  {
    const auto& p = nodes_.at(parent);
    child.depth = p.depth + 1;
    child.text = append_sentence(p.text, candidate.text);
  }
  child.sentence = Sentence{candidate.text, candidate.token_count, candidate.logprob};
  child.logprob_available = candidate.logprob_available;
  child.prior = prior;
  child.complete = candidate.end_of_response || child.depth >= config_.max_depth;
  child.terminal = child.complete;
  nodes_.push_back(std::move(child));
  nodes_[parent].children.push_back(id);
  return id;
}

double SearchTree::value_of(NodeId id) const {
  if (id == root()) return 0.0;
  const auto& n = nodes_.at(id);
  return n.reward ? n.reward->value : 0.0;
}

std::vector<NodeId> SearchTree::path_to(NodeId leaf) const {
  std::vector<NodeId> path;
  for (NodeId id = leaf; id != root(); id = nodes_.at(id).parent) path.push_back(id);
  return {path.rbegin(), path.rend()};
}

bool SearchTree::tainted(NodeId id) const {
  for (; id != kNoNode; id = nodes_.at(id).parent) {
    if (nodes_.at(id).poisoned) return true;
  }
  return false;
}

double weighted_child_mean(const SearchTree& tree, NodeId id) {
  double num = 0.0;
  double den = 0.0;
  for (NodeId c : tree.node(id).children) {
    const auto& child = tree.node(c);
    if (child.edge_visits <= 0) continue;
    num += child.edge_visits * child.q;
    den += child.edge_visits;
  }
  return den > 0.0 ? num / den : 0.0;
}

std::vector<std::string> check_invariants(const SearchTree& tree, double tolerance) {
  std::vector<std::string> problems;
  auto report = [&](NodeId id, const std::string& what) {
    std::ostringstream os;
    os << "node " << id << ": " << what;
    problems.push_back(os.str());
  };
  const auto& nodes = tree.nodes();
  for (const auto& n : nodes) {
    if (n.id != tree.root()) {
      if (n.parent >= n.id) report(n.id, "parent does not precede child");
      if (n.depth != tree.node(n.parent).depth + 1) report(n.id, "depth mismatch");
      if (n.edge_visits != n.visits) report(n.id, "edge visits differ from node visits");
      if (!std::isfinite(n.q)) report(n.id, "non-finite Q");
    }
    if (n.depth > tree.config().max_depth) report(n.id, "depth bound exceeded");
    if (!std::isfinite(n.v)) report(n.id, "non-finite V");
    if (n.expanded && !n.children.empty()) {
      int sum = 0;
      for (NodeId c : n.children) {
        if (c >= nodes.size() || tree.node(c).parent != n.id) {
          report(n.id, "child link broken");
          continue;
        }
        sum += tree.node(c).edge_visits;
      }
      if (n.visits != 1 + sum) {
        report(n.id, "visit count " + std::to_string(n.visits) + " != 1 + " +
                         std::to_string(sum));
      }
      if (std::abs(n.v - weighted_child_mean(tree, n.id)) > tolerance) {
        report(n.id, "V differs from visit-weighted child Q");
      }
    } else if (n.children.empty() && n.v != 0.0) {
      report(n.id, "leaf with non-zero V");
    }
  }
  return problems;
}

std::vector<NodeId> complete_leaves(const SearchTree& tree) {
  std::vector<NodeId> out;
  for (const auto& n : tree.nodes()) {
    if (n.id == tree.root() || !n.complete || !n.evaluated()) continue;
    if (tree.tainted(n.id)) continue;
    out.push_back(n.id);
  }
  return out;
}

double path_score(const SearchTree& tree, NodeId leaf, PathScore mode) {
  const auto path = tree.path_to(leaf);
  if (path.empty()) return 0.0;
  switch (mode) {
    case PathScore::leaf:
      return tree.node(path.back()).q;
    case PathScore::mean:
    case PathScore::sum: {
      double total = 0.0;
      for (NodeId id : path) total += tree.node(id).q;
      return mode == PathScore::sum ? total : total / static_cast<double>(path.size());
    }
  }
  return 0.0;
}

Trajectory trajectory(const SearchTree& tree, NodeId leaf) {
  Trajectory t;
  t.context = tree.context();
  for (NodeId id : tree.path_to(leaf)) t.sentences.push_back(tree.node(id).sentence);
  t.complete = tree.node(leaf).complete;
  t.cumulative_q = path_score(tree, leaf, tree.config().path_score);
  return t;
}

}  // namespace oscar::mcts
