#include "oscar/mcts/tree_io.hpp"

#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"

namespace oscar::mcts {

using nlohmann::json;

namespace {
constexpr const char* kTreeFormat = "oscar.tree/1";
}

json config_to_json(const SearchConfig& c) {
  return json{{"c_puct", c.c_puct},
              {"length_penalty", c.length_penalty},
              {"discount", c.discount},
              {"expansion_width", c.expansion_width},
              {"sim_threshold", c.sim_threshold},
              {"budget", c.budget},
              {"max_depth", c.max_depth},
              {"temperature", c.temperature},
              {"q_margin", c.q_margin},
              {"seed", c.seed},
              {"eval_budget", c.eval_budget},
              {"path_score", std::string(to_string(c.path_score))}};
}

SearchConfig config_from_json(const json& j) {
  SearchConfig c;
  c.c_puct = j.value("c_puct", c.c_puct);
  c.length_penalty = j.value("length_penalty", c.length_penalty);
  c.discount = j.value("discount", c.discount);
  c.expansion_width = j.value("expansion_width", c.expansion_width);
  c.sim_threshold = j.value("sim_threshold", c.sim_threshold);
  c.budget = j.value("budget", c.budget);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.temperature = j.value("temperature", c.temperature);
  c.q_margin = j.value("q_margin", c.q_margin);
  c.seed = j.value("seed", c.seed);
  c.eval_budget = j.value("eval_budget", c.eval_budget);
  c.path_score = path_score_from_string(j.value("path_score", std::string("sum")));
  return c;
}

json context_to_json(const SceneContext& ctx) {
  return json{{"image_ref", ctx.image_ref},
              {"prompt", ctx.prompt},
              {"gt_objects", ctx.gt_objects}};
}

SceneContext context_from_json(const json& j) {
  SceneContext ctx;
  ctx.image_ref = j.at("image_ref").get<std::string>();
  ctx.prompt = j.at("prompt").get<std::string>();
  ctx.gt_objects = j.at("gt_objects").get<std::set<std::string>>();
  return ctx;
}

json tree_to_json(const SearchTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    json node{{"id", n.id},
              {"parent", n.parent == kNoNode ? json(nullptr) : json(n.parent)},
              {"depth", n.depth},
              {"children", n.children},
              {"sentence", n.sentence.text},
              {"token_count", n.sentence.token_count},
              {"logprob", n.sentence.logprob},
              {"logprob_available", n.logprob_available},
              {"text", n.text},
              {"prior", n.prior},
              {"visits", n.visits},
              {"edge_visits", n.edge_visits},
              {"q", n.q},
              {"r", n.edge_reward},
              {"v", n.v},
              {"reward", n.reward ? rewards::to_json(*n.reward) : json(nullptr)},
              {"rollout", n.rollout},
              {"expanded", n.expanded},
              {"terminal", n.terminal},
              {"complete", n.complete},
              {"poisoned", n.poisoned},
              {"unexpandable", n.unexpandable},
              {"forced", n.forced}};
    nodes.push_back(std::move(node));
  }
  return json{{"format", kTreeFormat},
              {"context", context_to_json(tree.context())},
              {"config", config_to_json(tree.config())},
              {"iterations", tree.iterations},
              {"node_evaluations", tree.node_evaluations},
              {"failed_evaluations", tree.failed_evaluations},
              {"nodes", std::move(nodes)}};
}

SearchTree tree_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != kTreeFormat) {
      throw ProtocolError("unrecognized tree format", j.dump());
    }
    SearchTree tree(context_from_json(j.at("context")), config_from_json(j.at("config")));
    tree.iterations = j.at("iterations").get<int>();
    tree.node_evaluations = j.at("node_evaluations").get<int>();
    tree.failed_evaluations = j.at("failed_evaluations").get<int>();
    auto& nodes = tree.mutable_nodes();
    nodes.clear();
    for (const auto& e : j.at("nodes")) {
      SearchNode n;
      n.id = e.at("id").get<NodeId>();
      if (n.id != nodes.size()) throw ProtocolError("tree nodes out of order", e.dump());
      n.parent = e.at("parent").is_null() ? kNoNode : e.at("parent").get<NodeId>();
      n.depth = e.at("depth").get<int>();
      n.children = e.at("children").get<std::vector<NodeId>>();
      n.sentence.text = e.at("sentence").get<std::string>();
      n.sentence.token_count = e.at("token_count").get<int>();
      n.sentence.logprob = e.at("logprob").get<double>();
      n.logprob_available = e.at("logprob_available").get<bool>();
      n.text = e.at("text").get<std::string>();
      n.prior = e.at("prior").get<double>();
      n.visits = e.at("visits").get<int>();
      n.edge_visits = e.at("edge_visits").get<int>();
      n.q = e.at("q").get<double>();
      n.edge_reward = e.at("r").get<double>();
      n.v = e.at("v").get<double>();
      if (!e.at("reward").is_null()) n.reward = rewards::reward_record_from_json(e.at("reward"));
      n.rollout = e.at("rollout").get<std::string>();
      n.expanded = e.at("expanded").get<bool>();
      n.terminal = e.at("terminal").get<bool>();
      n.complete = e.at("complete").get<bool>();
      n.poisoned = e.at("poisoned").get<bool>();
      n.unexpandable = e.at("unexpandable").get<bool>();
      n.forced = e.at("forced").get<bool>();
      nodes.push_back(std::move(n));
    }
    if (nodes.empty()) throw ProtocolError("tree has no root", j.dump());
    return tree;
  } catch (const json::exception& ex) {
    throw ProtocolError(std::string("malformed tree dump: ") + ex.what(), j.dump());
  }
}

std::string tree_digest(const SearchTree& tree) { return sha256_hex(tree_to_json(tree).dump()); }

}  // namespace oscar::mcts
