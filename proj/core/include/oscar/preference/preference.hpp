#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oscar/mcts/tree.hpp"

namespace oscar::preference {

enum class PairSource { global_path, sibling };

std::string_view to_string(PairSource source);
PairSource pair_source_from_string(std::string_view name);

struct PreferencePair {
  std::string image_ref;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  PairSource source = PairSource::global_path;
  double q_margin = 0.0;
  int iteration = 0;

  bool operator==(const PreferencePair&) const = default;
};

/// Sentence depth of a sibling pair's divergence point (1-based), derived from
/// the chosen text.
int divergence_depth(const PreferencePair& pair);

/// Leaf of the complete trajectory with the highest path score, ties to the
/// lowest node id.
std::optional<mcts::NodeId> best_leaf(const mcts::SearchTree& tree);

/// (argmax, argmin) of the path score over complete, non-poisoned
/// trajectories. None with fewer than two trajectories or identical texts.
std::optional<PreferencePair> global_pair(const mcts::SearchTree& tree, int iteration = 0);

/// Along the optimal path, each chosen node paired with its lowest-Q sibling
/// when the Q gap is at least `q_margin`.
std::vector<PreferencePair> sibling_pairs(const mcts::SearchTree& tree, double q_margin,
                                          int iteration = 0);

/// Global pair followed by sibling pairs, using the tree's own q_margin.
std::vector<PreferencePair> extract_pairs(const mcts::SearchTree& tree, int iteration = 0);

nlohmann::json to_json(const PreferencePair& pair);
/// Requires exactly the seven dataset fields.
PreferencePair pair_from_json(const nlohmann::json& j);

/// JSON Lines sink. Thread-safe; lines appear in call order.
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::filesystem::path& path);
  void write(const PreferencePair& pair);
  std::size_t count() const { return count_; }
  void close();

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t count_ = 0;
};

/// Streams one pair per line without holding the file in memory.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);
  /// Next pair, or nullopt at end of file. Throws DatasetError with the
  /// 1-based line number on malformed input.
  std::optional<PreferencePair> next();
  std::size_t line() const { return line_; }

 private:
  std::ifstream in_;
  std::size_t line_ = 0;
};

void write_dataset(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path);
std::vector<PreferencePair> read_dataset(const std::filesystem::path& path);

struct LintReport {
  std::size_t pairs = 0;
  std::size_t sibling_pairs = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks every pair for distinct texts and every sibling pair for the
/// margin bound and a byte-identical shared prefix.
LintReport lint_dataset(const std::filesystem::path& path, double q_margin);
void lint_pair(const PreferencePair& pair, double q_margin, std::size_t line,
               LintReport& report);

}  // namespace oscar::preference
