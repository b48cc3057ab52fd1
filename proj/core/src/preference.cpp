#include "oscar/preference/preference.hpp"

#include <limits>
#include <set>

#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar::preference {

using nlohmann::json;

std::string_view to_string(PairSource source) {
  return source == PairSource::sibling ? "sibling" : "global_path";
}

PairSource pair_source_from_string(std::string_view name) {
  if (name == "global_path") return PairSource::global_path;
  if (name == "sibling") return PairSource::sibling;
  throw ArgumentError("unknown pair source: " + std::string(name));
}

int divergence_depth(const PreferencePair& pair) {
  return static_cast<int>(split_sentence_texts(pair.chosen).size());
}

namespace {

PreferencePair make_pair(const mcts::SearchTree& tree, std::string chosen, std::string rejected,
                         PairSource source, double margin, int iteration) {
  PreferencePair p;
  p.image_ref = tree.context().image_ref;
  p.prompt = tree.context().prompt;
  p.chosen = std::move(chosen);
  p.rejected = std::move(rejected);
  p.source = source;
  p.q_margin = margin;
  p.iteration = iteration;
  return p;
}

}  // namespace

std::optional<mcts::NodeId> best_leaf(const mcts::SearchTree& tree) {
  std::optional<mcts::NodeId> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (auto leaf : mcts::complete_leaves(tree)) {
    const double s = mcts::path_score(tree, leaf, tree.config().path_score);
    if (s > best_score) {
      best_score = s;
      best = leaf;
    }
  }
  return best;
}

std::optional<PreferencePair> global_pair(const mcts::SearchTree& tree, int iteration) {
  const auto leaves = mcts::complete_leaves(tree);
  if (leaves.size() < 2) return std::nullopt;
  const auto mode = tree.config().path_score;
  mcts::NodeId hi = leaves.front();
  mcts::NodeId lo = leaves.front();
  double hi_score = mcts::path_score(tree, hi, mode);
  double lo_score = hi_score;
  for (auto leaf : leaves) {
    const double s = mcts::path_score(tree, leaf, mode);
    if (s > hi_score) {
      hi_score = s;
      hi = leaf;
    }
    if (s < lo_score) {
      lo_score = s;
      lo = leaf;
    }
  }
  if (hi == lo || tree.node(hi).text == tree.node(lo).text) return std::nullopt;
  return make_pair(tree, tree.node(hi).text, tree.node(lo).text, PairSource::global_path,
                   hi_score - lo_score, iteration);
}

std::vector<PreferencePair> sibling_pairs(const mcts::SearchTree& tree, double q_margin,
                                          int iteration) {
  std::vector<PreferencePair> out;
  const auto leaf = best_leaf(tree);
  if (!leaf) return out;
  for (auto id : tree.path_to(*leaf)) {
    const auto& chosen = tree.node(id);
    const auto& parent = tree.node(chosen.parent);
    mcts::NodeId worst = mcts::kNoNode;
    double worst_q = std::numeric_limits<double>::infinity();
    for (auto sib : parent.children) {
      if (sib == id) continue;
      const auto& s = tree.node(sib);
      if (s.poisoned || !s.evaluated() || s.edge_visits == 0) continue;
      if (s.q < worst_q) {
        worst_q = s.q;
        worst = sib;
      }
    }
    if (worst == mcts::kNoNode) continue;
    const double margin = chosen.q - worst_q;
    if (!(margin >= q_margin)) continue;
    if (chosen.text == tree.node(worst).text) continue;
    out.push_back(make_pair(tree, chosen.text, tree.node(worst).text, PairSource::sibling, margin,
                            iteration));
  }
  return out;
}

std::vector<PreferencePair> extract_pairs(const mcts::SearchTree& tree, int iteration) {
  std::vector<PreferencePair> out;
  if (auto g = global_pair(tree, iteration)) out.push_back(std::move(*g));
  auto s = sibling_pairs(tree, tree.config().q_margin, iteration);
  out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  return out;
}

json to_json(const PreferencePair& p) {
  return json{{"image_ref", p.image_ref}, {"prompt", p.prompt},
              {"chosen", p.chosen},       {"rejected", p.rejected},
              {"source", std::string(to_string(p.source))},
              {"q_margin", p.q_margin},   {"iteration", p.iteration}};
}

PreferencePair pair_from_json(const json& j) {
  static const std::set<std::string> kFields = {"image_ref", "prompt",   "chosen",   "rejected",
                                                "source",    "q_margin", "iteration"};
  if (!j.is_object()) throw ArgumentError("pair is not a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kFields.count(key)) throw ArgumentError("unexpected field: " + key);
  }
  if (j.size() != kFields.size()) throw ArgumentError("missing pair field");
  PreferencePair p;
  p.image_ref = j.at("image_ref").get<std::string>();
  p.prompt = j.at("prompt").get<std::string>();
  p.chosen = j.at("chosen").get<std::string>();
  p.rejected = j.at("rejected").get<std::string>();
  p.source = pair_source_from_string(j.at("source").get<std::string>());
  p.q_margin = j.at("q_margin").get<double>();
  p.iteration = j.at("iteration").get<int>();
  return p;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("cannot open dataset for writing: " + path.string());
}

void DatasetWriter::write(const PreferencePair& pair) {
  const std::string line = to_json(pair).dump() + "\n";
  std::lock_guard lock(mutex_);
  out_ << line;
  ++count_;
}

void DatasetWriter::close() {
  std::lock_guard lock(mutex_);
  out_.flush();
  if (!out_) throw Error("failed writing dataset: " + path_.string());
  out_.close();
}

DatasetReader::DatasetReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw DatasetError("cannot open dataset: " + path.string(), 0);
}

std::optional<PreferencePair> DatasetReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    try {
      return pair_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw DatasetError(e.what(), line_);
    } catch (const ArgumentError& e) {
      throw DatasetError(e.what(), line_);
    }
  }
  return std::nullopt;
}

void write_dataset(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path) {
  DatasetWriter writer(path);
  for (const auto& p : pairs) writer.write(p);
  writer.close();
}

std::vector<PreferencePair> read_dataset(const std::filesystem::path& path) {
  DatasetReader reader(path);
  std::vector<PreferencePair> out;
  while (auto p = reader.next()) out.push_back(std::move(*p));
  return out;
}

void lint_pair(const PreferencePair& pair, double q_margin, std::size_t line,
               LintReport& report) {
  auto fail = [&](const std::string& what) {
    report.violations.push_back("line " + std::to_string(line) + ": " + what);
  };
  ++report.pairs;
  if (pair.chosen == pair.rejected) fail("chosen equals rejected");
  if (pair.q_margin < 0.0) fail("negative q_margin");
  if (pair.source != PairSource::sibling) return;
  ++report.sibling_pairs;
  if (!(pair.q_margin >= q_margin)) fail("sibling q_margin below threshold");
  const auto a = split_sentence_texts(pair.chosen);
  const auto b = split_sentence_texts(pair.rejected);
  if (a.size() != b.size() || a.empty()) {
    fail("sibling responses differ in depth");
    return;
  }
  // The shared prefix is everything before the last sentence and must match
  // byte for byte.
  const auto cut_a = pair.chosen.size() - a.back().size();
  const auto cut_b = pair.rejected.size() - b.back().size();
  if (cut_a != cut_b || pair.chosen.compare(0, cut_a, pair.rejected, 0, cut_b) != 0) {
    fail("sibling prefixes differ");
  }
}

LintReport lint_dataset(const std::filesystem::path& path, double q_margin) {
  LintReport report;
  DatasetReader reader(path);
  while (auto p = reader.next()) lint_pair(*p, q_margin, reader.line(), report);
  return report;
}

}  // namespace oscar::preference
