#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "oscar/backend/remote.hpp"
#include "oscar/baseline/beam.hpp"
#include "oscar/core/config.hpp"
#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/parallel.hpp"
#include "oscar/core/text.hpp"
#include "oscar/core/version.hpp"
#include "oscar/dpo/dpo.hpp"
#include "oscar/extraction/extraction.hpp"
#include "oscar/mcts/search.hpp"
#include "oscar/mcts/tree_io.hpp"
#include "oscar/preference/preference.hpp"
#include "oscar/sim/sim_backend.hpp"
#include "run_dir.hpp"

namespace oscar::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

/// Command-line values; unset optionals leave config-file values alone.
struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> endpoint;
  std::optional<std::string> token;
  std::optional<std::string> model;
  std::string world;
  std::string policy;
  std::string dict;

  std::optional<int> budget;
  std::optional<double> c_puct;
  std::optional<double> length_penalty;
  std::optional<double> discount;
  std::optional<int> expansion_width;
  std::optional<double> sim_threshold;
  std::optional<int> max_depth;
  std::optional<double> temperature;
  std::optional<double> q_margin;
  std::optional<int> eval_budget;
  std::optional<std::string> path_score;

  std::optional<double> hallucination_rate;
  std::optional<double> disc_accuracy;
  std::optional<int> scene_count;
  bool trap_scenes = false;

  std::optional<double> beta;
  std::optional<double> learning_rate;
  std::optional<int> epochs;
  std::optional<int> iterations;
  std::optional<int> beam_width;

  std::vector<int> scenes;
  std::string tree;
  std::string trees;
  std::string dataset;
  std::string captions;
  std::string contexts;
  int iteration = 0;
  std::string format = "text";
};

struct Settings {
  SearchConfig search;
  dpo::DpoConfig dpo;
  sim::WorldParams world;
  bool world_seed_set = false;
  baseline::BeamConfig beam;
  backend::RemoteConfig remote;
  int workers = 1;
};

template <typename T>
void override(T& target, const std::optional<T>& value) {
  if (value) target = *value;
}

int to_int(const std::string& key, const std::string& v) {
  return static_cast<int>(parse_int(key, v));
}

Settings load_settings(const Flags& f) {
  Settings s;
  s.search.seed = kDefaultSeed;
  s.remote = backend::RemoteConfig::from_env();
  if (!f.config.empty()) {
    auto kv = KeyValueConfig::load(f.config);
    take_search_config(kv, s.search);
    auto num = [&](const char* key, double& dst) {
      if (auto v = kv.take(key)) dst = parse_double(key, *v);
    };
    auto integer = [&](const char* key, int& dst) {
      if (auto v = kv.take(key)) dst = to_int(key, *v);
    };
    num("beta", s.dpo.beta);
    num("learning_rate", s.dpo.learning_rate);
    integer("epochs", s.dpo.epochs);
    integer("batch_size", s.dpo.batch_size);
    integer("iterations", s.dpo.iterations);
    num("global_weight", s.dpo.global_weight);
    num("sibling_weight", s.dpo.sibling_weight);
    if (auto v = kv.take("world_seed")) {
      s.world.seed = parse_uint64("world_seed", *v);
      s.world_seed_set = true;
    }
    num("hallucination_rate", s.world.hallucination_rate);
    num("disc_accuracy", s.world.disc_accuracy);
    integer("scene_count", s.world.scene_count);
    integer("min_objects", s.world.min_objects);
    integer("max_objects", s.world.max_objects);
    integer("distractors_per_scene", s.world.distractors_per_scene);
    integer("single_templates", s.world.single_templates);
    integer("pair_templates", s.world.pair_templates);
    integer("sentences_per_caption", s.world.sentences_per_caption);
    num("prior_stddev", s.world.prior_stddev);
    if (auto v = kv.take("trap_scenes")) s.world.trap_scenes = parse_bool("trap_scenes", *v);
    integer("beam_width", s.beam.beam_width);
    if (auto v = kv.take("endpoint")) s.remote.endpoint = *v;
    if (auto v = kv.take("model")) s.remote.model = *v;
    integer("max_in_flight", s.remote.max_in_flight);
    integer("max_attempts", s.remote.max_attempts);
    integer("workers", s.workers);
    if (!kv.values().empty()) {
      throw ConfigError("unknown config key '" + kv.values().begin()->first + "'");
    }
  }
  override(s.search.seed, f.seed);
  override(s.workers, f.workers);
  override(s.remote.endpoint, f.endpoint);
  override(s.remote.token, f.token);
  override(s.remote.model, f.model);
  override(s.search.budget, f.budget);
  override(s.search.c_puct, f.c_puct);
  override(s.search.length_penalty, f.length_penalty);
  override(s.search.discount, f.discount);
  override(s.search.expansion_width, f.expansion_width);
  override(s.search.sim_threshold, f.sim_threshold);
  override(s.search.max_depth, f.max_depth);
  override(s.search.temperature, f.temperature);
  override(s.search.q_margin, f.q_margin);
  override(s.search.eval_budget, f.eval_budget);
  if (f.path_score) s.search.path_score = path_score_from_string(*f.path_score);
  override(s.world.hallucination_rate, f.hallucination_rate);
  override(s.world.disc_accuracy, f.disc_accuracy);
  override(s.world.scene_count, f.scene_count);
  if (f.trap_scenes) s.world.trap_scenes = true;
  override(s.dpo.beta, f.beta);
  override(s.dpo.learning_rate, f.learning_rate);
  override(s.dpo.epochs, f.epochs);
  override(s.dpo.iterations, f.iterations);
  override(s.beam.beam_width, f.beam_width);

  if (!s.world_seed_set) s.world.seed = s.search.seed;
  s.dpo.seed = s.search.seed;
  s.beam.seed = s.search.seed;
  s.beam.expansion_width = s.search.expansion_width;
  s.beam.max_depth = s.search.max_depth;
  s.beam.temperature = s.search.temperature;
  s.beam.eval_budget = s.search.eval_budget;
  if (s.workers < 1) throw ConfigError("workers must be at least 1");
  s.search.validate();
  s.dpo.validate();
  s.world.validate();
  s.beam.validate();
  return s;
}

json settings_json(const Settings& s) {
  json world{{"seed", s.world.seed},
             {"hallucination_rate", s.world.hallucination_rate},
             {"disc_accuracy", s.world.disc_accuracy},
             {"scene_count", s.world.scene_count},
             {"trap_scenes", s.world.trap_scenes}};
  json dpo{{"beta", s.dpo.beta},
           {"learning_rate", s.dpo.learning_rate},
           {"epochs", s.dpo.epochs},
           {"batch_size", s.dpo.batch_size},
           {"iterations", s.dpo.iterations},
           {"global_weight", s.dpo.global_weight},
           {"sibling_weight", s.dpo.sibling_weight}};
  return json{{"search", mcts::config_to_json(s.search)},
              {"dpo", std::move(dpo)},
              {"world", std::move(world)},
              {"beam_width", s.beam.beam_width},
              {"seed", s.search.seed}};
}

/// World, policy and the backend built from them or from the endpoint.
struct Session {
  std::shared_ptr<const sim::SimWorld> world;
  std::shared_ptr<const sim::ToyPolicy> policy;
  std::unique_ptr<backend::Backend> backend;
  std::unique_ptr<extraction::SynonymDictionary> owned_dict;
  const extraction::SynonymDictionary* dict = &extraction::SynonymDictionary::coco_default();
};

Session open_session(const Flags& f, const Settings& s, bool allow_remote) {
  Session session;
  if (!f.world.empty()) {
    session.world = std::make_shared<const sim::SimWorld>(
        sim::SimWorld::from_json(json::parse(read_file(f.world))));
  } else {
    session.world = std::make_shared<const sim::SimWorld>(sim::SimWorld::generate(s.world));
  }
  if (!f.policy.empty()) {
    session.policy = std::make_shared<const sim::ToyPolicy>(
        sim::ToyPolicy::from_json(json::parse(read_file(f.policy))));
  } else {
    session.policy =
        std::make_shared<const sim::ToyPolicy>(sim::ToyPolicy::from_world(*session.world));
  }
  if (!f.dict.empty()) {
    session.owned_dict =
        std::make_unique<extraction::SynonymDictionary>(extraction::SynonymDictionary::load(f.dict));
    session.dict = session.owned_dict.get();
  }
  if (allow_remote && !s.remote.endpoint.empty()) {
    session.backend = std::make_unique<backend::RemoteBackend>(s.remote);
  } else {
    session.backend = std::make_unique<sim::SimBackend>(session.world, session.policy);
  }
  return session;
}

std::vector<std::size_t> selected_scenes(const Flags& f, const sim::SimWorld& world) {
  std::vector<std::size_t> out;
  if (f.scenes.empty()) {
    for (std::size_t i = 0; i < world.size(); ++i) out.push_back(i);
    return out;
  }
  for (int i : f.scenes) {
    if (i < 0 || static_cast<std::size_t>(i) >= world.size()) {
      throw ConfigError("scene " + std::to_string(i) + " is out of range");
    }
    out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

std::string scene_name(std::size_t scene) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene-%04zu", scene);
  return buf;
}

RunDir require_out(const Flags& f) {
  if (f.out.empty()) throw ConfigError("--out is required for this command");
  return RunDir(f.out);
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DatasetError(path + ": invalid JSON", n);
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<std::string> read_captions(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& j : read_jsonl(path)) {
    out.push_back(j.is_string() ? j.get<std::string>() : j.at("caption").get<std::string>());
  }
  return out;
}

std::vector<SceneContext> read_contexts(const std::string& path) {
  std::vector<SceneContext> out;
  for (const auto& j : read_jsonl(path)) out.push_back(mcts::context_from_json(j));
  return out;
}

json chair_json(const extraction::ChairReport& r) {
  return json{{"chair_s", r.chair_s},
              {"chair_i", r.chair_i},
              {"captions", r.captions},
              {"hallucinated_captions", r.hallucinated_captions},
              {"mentions", r.mentions},
              {"hallucinated_mentions", r.hallucinated_mentions}};
}

// ---------------------------------------------------------------- commands

int cmd_simulate_world(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  auto dir = require_out(f);
  const auto world = sim::SimWorld::generate(s.world);
  dir.write("world.json", world.to_json().dump(2) + "\n");
  dir.log(json{{"event", "simulate-world"}, {"scenes", world.size()}, {"seed", s.world.seed}});
  dir.commit("simulate-world", settings_json(s), "none");
  out << json{{"scenes", world.size()}, {"seed", s.world.seed}}.dump() << '\n';
  err << "wrote world with " << world.size() << " scenes\n";
  return kExitOk;
}

int cmd_search(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  auto dir = require_out(f);
  auto session = open_session(f, s, true);
  const auto scenes = selected_scenes(f, *session.world);

  struct Outcome {
    std::optional<mcts::SearchTree> tree;
    std::string audit;
    std::string error;
  };
  std::vector<Outcome> outcomes(scenes.size());
  parallel_for(scenes.size(), s.workers, [&](std::size_t i) {
    std::ostringstream audit_stream;
    rewards::RewardAuditLog audit(audit_stream);
    mcts::SearchOptions options;
    options.rewards.dictionary = session.dict;
    options.audit = &audit;
    options.tree_name = scene_name(scenes[i]);
    try {
      outcomes[i].tree = mcts::run_search(session.world->scene(scenes[i]).context, s.search,
                                          *session.backend, options);
    } catch (const mcts::SearchError& e) {
      outcomes[i].tree = e.partial_tree();
      outcomes[i].error = e.what();
    }
    outcomes[i].audit = audit_stream.str();
  });

  std::string audit;
  std::size_t failed = 0;
  json summary = json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& o = outcomes[i];
    const auto name = scene_name(scenes[i]);
    dir.write("trees/" + name + ".json", mcts::tree_to_json(*o.tree).dump(2) + "\n");
    audit += o.audit;
    const bool ok = o.error.empty();
    if (!ok) ++failed;
    json event{{"event", "search"},
               {"scene", scenes[i]},
               {"nodes", o.tree->size()},
               {"node_evaluations", o.tree->node_evaluations},
               {"complete_trajectories", mcts::complete_leaves(*o.tree).size()},
               {"digest", mcts::tree_digest(*o.tree)}};
    if (!ok) event["error"] = o.error;
    dir.log(event);
    summary.push_back(event);
    err << name << ": " << o.tree->size() << " nodes, " << o.tree->node_evaluations
        << " evaluations" << (ok ? "" : " (failed: " + o.error + ")") << '\n';
  }
  dir.write("rewards.jsonl", audit);
  dir.commit("search", settings_json(s), session.backend->descriptor());
  out << summary.dump() << '\n';
  return failed == 0 ? kExitOk : kExitRuntime;
}

void print_tree(const mcts::SearchTree& tree, mcts::NodeId id, int indent, std::ostream& out) {
  const auto& n = tree.node(id);
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ') << '[' << id << "] N=" << n.visits;
  out << std::fixed << std::setprecision(4);
  if (id != tree.root()) out << " Q=" << n.q << " P=" << n.prior;
  out << " V=" << n.v;
  if (n.reward) out << " value=" << n.reward->value << " gate=" << n.reward->gate;
  out.unsetf(std::ios::floatfield);
  std::string flags;
  if (n.complete) flags += " complete";
  if (n.poisoned) flags += " poisoned";
  if (n.unexpandable) flags += " unexpandable";
  if (n.forced) flags += " forced";
  out << flags;
  if (id != tree.root()) out << " | " << n.sentence.text;
  out << '\n';
  for (auto c : n.children) print_tree(tree, c, indent + 1, out);
}

int cmd_dump_tree(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.tree.empty()) throw ConfigError("--tree is required");
  const auto tree = mcts::tree_from_json(json::parse(read_file(f.tree)));
  for (const auto& problem : mcts::check_invariants(tree)) err << "invariant: " << problem << '\n';
  if (f.format == "json") {
    out << mcts::tree_to_json(tree).dump(2) << '\n';
  } else if (f.format == "text") {
    out << tree.context().image_ref << " (" << tree.size() << " nodes, "
        << tree.node_evaluations << " evaluations)\n";
    print_tree(tree, tree.root(), 0, out);
  } else {
    throw ConfigError("--format must be text or json");
  }
  return kExitOk;
}

int cmd_build_prefs(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  if (f.trees.empty()) throw ConfigError("--trees is required");
  auto dir = require_out(f);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(f.trees)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  preference::DatasetWriter writer(dir.root() / "pairs.jsonl");
  preference::LintReport lint;
  std::size_t global = 0;
  for (const auto& file : files) {
    const auto tree = mcts::tree_from_json(json::parse(read_file(file)));
    for (const auto& pair : preference::extract_pairs(tree, f.iteration)) {
      writer.write(pair);
      preference::lint_pair(pair, tree.config().q_margin, writer.count(), lint);
      if (pair.source == preference::PairSource::global_path) ++global;
    }
  }
  writer.close();
  dir.track("pairs.jsonl");
  const json summary{{"trees", files.size()},
                     {"pairs", lint.pairs},
                     {"global_pairs", global},
                     {"sibling_pairs", lint.sibling_pairs},
                     {"lint_violations", lint.violations}};
  dir.write("prefs.json", summary.dump(2) + "\n");
  dir.log(json{{"event", "build-prefs"}, {"pairs", lint.pairs}, {"trees", files.size()}});
  dir.commit("build-prefs", settings_json(s), "none");
  out << summary.dump() << '\n';
  err << lint.pairs << " pairs from " << files.size() << " trees\n";
  return lint.ok() ? kExitOk : kExitRuntime;
}

int cmd_train(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  if (f.dataset.empty()) throw ConfigError("--dataset is required");
  auto dir = require_out(f);
  auto session = open_session(f, s, false);
  std::vector<dpo::ScoredPair> batch;
  std::size_t skipped = 0;
  preference::DatasetReader reader(f.dataset);
  while (auto pair = reader.next()) {
    if (auto scored = dpo::score_pair(*session.world, *pair, s.dpo)) {
      batch.push_back(std::move(*scored));
    } else {
      ++skipped;
      dir.log(json{{"event", "pair-skipped"}, {"line", reader.line()}, {"image_ref", pair->image_ref}});
    }
  }
  if (batch.empty()) throw Error("dataset has no pair scorable by the simulator policy");
  const sim::ToyPolicy ref = *session.policy;
  sim::ToyPolicy policy = ref;
  const auto pre = dpo::greedy_chair(*session.world, policy);
  const auto result = dpo::train(policy, ref, *session.world, batch, s.dpo);
  const auto post = dpo::greedy_chair(*session.world, policy);
  dir.write("policy.json", policy.to_json().dump() + "\n");
  const json report{{"pairs", batch.size()},
                    {"skipped_pairs", skipped},
                    {"steps", result.steps},
                    {"loss_curve", result.loss_curve},
                    {"pre", chair_json(pre)},
                    {"post", chair_json(post)},
                    {"policy_digest", dpo::policy_digest(policy)}};
  dir.write("train.json", report.dump(2) + "\n");
  dir.log(json{{"event", "train"}, {"pairs", batch.size()}, {"loss", result.loss_curve.back()}});
  dir.commit("train", settings_json(s), session.backend->descriptor());
  out << report.dump() << '\n';
  err << "trained on " << batch.size() << " pairs, loss " << result.loss_curve.front() << " -> "
      << result.loss_curve.back() << '\n';
  return kExitOk;
}

int cmd_loop(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  if (f.endpoint) throw ConfigError("loop trains the simulator policy; --endpoint is not supported");
  auto dir = require_out(f);
  auto session = open_session(f, s, false);
  dpo::IterationOptions options{s.search, s.dpo, s.workers};
  sim::ToyPolicy policy = *session.policy;
  const auto initial = dpo::greedy_chair(*session.world, policy);
  json iterations = json::array();
  for (int m = 1; m <= s.dpo.iterations; ++m) {
    auto result = dpo::run_iteration(session.world, policy, m, options);
    policy = std::move(result.policy);
    const auto stem = "iter-" + std::to_string(m) + "/";
    std::string pairs;
    for (const auto& p : result.pairs) pairs += preference::to_json(p).dump() + "\n";
    dir.write(stem + "pairs.jsonl", pairs);
    dir.write(stem + "policy.json", policy.to_json().dump() + "\n");
    const auto report = dpo::to_json(result.report);
    dir.write(stem + "report.json", report.dump(2) + "\n");
    dir.log(json{{"event", "iteration"},
                 {"iteration", m},
                 {"pairs", result.pairs.size()},
                 {"chair_i", result.report.post.chair_i},
                 {"chair_s", result.report.post.chair_s}});
    iterations.push_back(report);
    err << "iteration " << m << ": " << result.pairs.size() << " pairs, chair_i "
        << result.report.pre.chair_i << " -> " << result.report.post.chair_i << '\n';
  }
  json rates = json::array({initial.chair_i});
  for (const auto& r : iterations) rates.push_back(r.at("post").at("chair_i"));
  const json summary{{"initial", chair_json(initial)},
                     {"hallucination_rate", rates},
                     {"final_policy_digest", dpo::policy_digest(policy)}};
  dir.write("summary.json", summary.dump(2) + "\n");
  dir.commit("loop", settings_json(s), session.backend->descriptor());
  out << summary.dump() << '\n';
  return kExitOk;
}

int cmd_chair(const Flags& f, std::ostream& out) {
  if (f.captions.empty() || f.contexts.empty()) {
    throw ConfigError("--captions and --contexts are required");
  }
  std::unique_ptr<extraction::SynonymDictionary> owned;
  const auto* dict = &extraction::SynonymDictionary::coco_default();
  if (!f.dict.empty()) {
    owned = std::make_unique<extraction::SynonymDictionary>(extraction::SynonymDictionary::load(f.dict));
    dict = owned.get();
  }
  const auto report = extraction::chair(read_captions(f.captions), read_contexts(f.contexts), *dict);
  const auto text = chair_json(report).dump(2);
  if (!f.out.empty()) {
    RunDir dir(f.out);
    dir.write("chair.json", text + "\n");
    dir.commit("chair", json::object(), "none");
  }
  out << text << '\n';
  return kExitOk;
}

int cmd_self_verify(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  if (f.captions.empty() || f.contexts.empty()) {
    throw ConfigError("--captions and --contexts are required");
  }
  auto dir = require_out(f);
  auto session = open_session(f, s, true);
  const auto captions = read_captions(f.captions);
  const auto contexts = read_contexts(f.contexts);
  if (captions.size() != contexts.size()) throw ArgumentError("captions and contexts differ in length");
  std::vector<extraction::RewriteResult> results(captions.size());
  parallel_for(captions.size(), s.workers, [&](std::size_t i) {
    results[i] = extraction::self_verify_rewrite(contexts[i], captions[i], *session.backend,
                                                 *session.dict);
  });
  std::string lines;
  std::vector<std::string> rewritten;
  for (const auto& r : results) {
    json removals = json::array();
    for (const auto& rm : r.removals) {
      removals.push_back(json{{"object", rm.object}, {"p_no", rm.p_no},
                              {"sentence_dropped", rm.sentence_dropped}});
    }
    lines += json{{"caption", r.caption}, {"removals", removals}, {"unverified", r.unverified}}.dump() + "\n";
    rewritten.push_back(r.caption);
  }
  dir.write("rewritten.jsonl", lines);
  const auto before = extraction::chair(captions, contexts, *session.dict);
  const auto after = extraction::chair(rewritten, contexts, *session.dict);
  const json report{{"before", chair_json(before)}, {"after", chair_json(after)}};
  dir.write("self_verify.json", report.dump(2) + "\n");
  dir.log(json{{"event", "self-verify"}, {"captions", captions.size()}});
  dir.commit("self-verify", settings_json(s), session.backend->descriptor());
  out << report.dump() << '\n';
  err << "chair_s " << before.chair_s << " -> " << after.chair_s << ", chair_i " << before.chair_i
      << " -> " << after.chair_i << '\n';
  return kExitOk;
}

int cmd_baseline(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  auto dir = require_out(f);
  auto session = open_session(f, s, true);
  const auto scenes = selected_scenes(f, *session.world);
  std::vector<baseline::BeamResult> results(scenes.size());
  rewards::RewardOptions options;
  options.dictionary = session.dict;
  parallel_for(scenes.size(), s.workers, [&](std::size_t i) {
    results[i] = baseline::beam_search(session.world->scene(scenes[i]).context, s.beam,
                                       *session.backend, options);
  });
  std::string lines;
  std::size_t pairs = 0;
  std::size_t passed = 0;
  long evaluations = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& r = results[i];
    evaluations += r.node_evaluations;
    if (r.pair) {
      ++pairs;
      lines += preference::to_json(*r.pair).dump() + "\n";
    }
    if (!r.finished.empty()) {
      const auto objects = extraction::extract_objects(r.finished.front().text, *session.dict).objects;
      passed += static_cast<std::size_t>(
          rewards::gate(objects, session.world->scene(scenes[i]).context.gt_objects));
    }
    dir.log(json{{"event", "beam"}, {"scene", scenes[i]}, {"node_evaluations", r.node_evaluations},
                 {"finished", r.finished.size()}});
  }
  dir.write("baseline_pairs.jsonl", lines);
  const json summary{{"scenes", scenes.size()},
                     {"pairs", pairs},
                     {"node_evaluations", evaluations},
                     {"chosen_gate_pass_rate",
                      scenes.empty() ? 0.0 : static_cast<double>(passed) / scenes.size()}};
  dir.write("baseline.json", summary.dump(2) + "\n");
  dir.commit("baseline", settings_json(s), session.backend->descriptor());
  out << summary.dump() << '\n';
  err << pairs << " beam pairs, " << evaluations << " node evaluations\n";
  return kExitOk;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "Flat key = value config file")->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "Run directory");
  app->add_option("--seed", f.seed, "Master seed (default 7)");
  app->add_option("--workers", f.workers, "Parallel workers");
  app->add_option("--endpoint", f.endpoint, "Remote completion endpoint (else OSCAR_ENDPOINT)");
  app->add_option("--token", f.token, "Bearer token (else OSCAR_TOKEN)");
  app->add_option("--model", f.model, "Model id sent to the endpoint");
  app->add_option("--world", f.world, "Simulated world JSON")->check(CLI::ExistingFile);
  app->add_option("--policy", f.policy, "Toy policy JSON")->check(CLI::ExistingFile);
  app->add_option("--dict", f.dict, "Synonym dictionary TSV")->check(CLI::ExistingFile);
}

void add_search(CLI::App* app, Flags& f) {
  app->add_option("--budget", f.budget, "MCTS iterations");
  app->add_option("--c-puct", f.c_puct);
  app->add_option("--length-penalty", f.length_penalty);
  app->add_option("--discount", f.discount);
  app->add_option("--expansion-width", f.expansion_width);
  app->add_option("--sim-threshold", f.sim_threshold);
  app->add_option("--max-depth", f.max_depth);
  app->add_option("--temperature", f.temperature);
  app->add_option("--q-margin", f.q_margin);
  app->add_option("--eval-budget", f.eval_budget, "Cap on node evaluations");
  app->add_option("--path-score", f.path_score)->check(CLI::IsMember({"sum", "leaf", "mean"}));
}

void add_world(CLI::App* app, Flags& f) {
  app->add_option("--hallucination-rate", f.hallucination_rate);
  app->add_option("--disc-accuracy", f.disc_accuracy);
  app->add_option("--scenes", f.scene_count, "Number of simulated scenes");
  app->add_flag("--trap-scenes", f.trap_scenes, "Generate delayed-hallucination trap scenes");
}

void add_dpo(CLI::App* app, Flags& f) {
  app->add_option("--beta", f.beta);
  app->add_option("--learning-rate", f.learning_rate);
  app->add_option("--epochs", f.epochs);
  app->add_option("--iterations", f.iterations);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Hallucination-aware preference data via sentence-level tree search", "oscar"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* search = app.add_subcommand("search", "Run MCTS over scenes and dump trees");
  add_common(search, f);
  add_search(search, f);
  add_world(search, f);
  search->add_option("--scene", f.scenes, "Scene index (repeatable; default all)");

  auto* build = app.add_subcommand("build-prefs", "Extract preference pairs from tree dumps");
  add_common(build, f);
  build->add_option("--trees", f.trees, "Directory of tree dumps")->check(CLI::ExistingDirectory);
  build->add_option("--iteration", f.iteration, "Iteration tag for the pairs");

  auto* train = app.add_subcommand("train", "DPO on a dataset against the simulator policy");
  add_common(train, f);
  add_world(train, f);
  add_dpo(train, f);
  train->add_option("--dataset", f.dataset, "Preference pairs JSON Lines")->check(CLI::ExistingFile);

  auto* loop = app.add_subcommand("loop", "Iterate search, pair extraction and DPO");
  add_common(loop, f);
  add_search(loop, f);
  add_world(loop, f);
  add_dpo(loop, f);

  auto* chair = app.add_subcommand("chair", "CHAIR metrics for captions");
  add_common(chair, f);
  chair->add_option("--captions", f.captions, "Captions JSON Lines")->check(CLI::ExistingFile);
  chair->add_option("--contexts", f.contexts, "Contexts JSON Lines")->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("self-verify", "Rewrite captions by self-verification");
  add_common(verify, f);
  add_world(verify, f);
  verify->add_option("--captions", f.captions, "Captions JSON Lines")->check(CLI::ExistingFile);
  verify->add_option("--contexts", f.contexts, "Contexts JSON Lines")->check(CLI::ExistingFile);

  auto* beam = app.add_subcommand("baseline", "Beam-search preference pairs");
  add_common(beam, f);
  add_search(beam, f);
  add_world(beam, f);
  beam->add_option("--beam-width", f.beam_width);
  beam->add_option("--scene", f.scenes, "Scene index (repeatable; default all)");

  auto* dump = app.add_subcommand("dump-tree", "Print a tree dump");
  add_common(dump, f);
  dump->add_option("--tree", f.tree, "Tree dump JSON")->check(CLI::ExistingFile);
  dump->add_option("--format", f.format, "text or json");

  auto* world = app.add_subcommand("simulate-world", "Generate a simulated world");
  add_common(world, f);
  add_world(world, f);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*dump) return cmd_dump_tree(f, out, err);
    if (*chair) return cmd_chair(f, out);
    const Settings s = load_settings(f);
    if (*search) return cmd_search(f, s, out, err);
    if (*build) return cmd_build_prefs(f, s, out, err);
    if (*train) return cmd_train(f, s, out, err);
    if (*loop) return cmd_loop(f, s, out, err);
    if (*verify) return cmd_self_verify(f, s, out, err);
    if (*beam) return cmd_baseline(f, s, out, err);
    if (*world) return cmd_simulate_world(f, s, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace oscar::cli
