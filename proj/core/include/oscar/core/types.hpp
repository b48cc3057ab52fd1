#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace oscar {

/// One image/prompt pair together with the canonical names of the objects
/// that are actually present.
struct SceneContext {
  std::string image_ref;
  std::string prompt;
  std::set<std::string> gt_objects;

  bool operator==(const SceneContext&) const = default;
};

struct Sentence {
  std::string text;
  int token_count = 0;
  double logprob = 0.0;

  bool operator==(const Sentence&) const = default;
};

/// A sentence proposed as the next action from some partial response.
struct CandidateSentence {
  std::string text;
  int token_count = 1;
  /// Raw sequence log-probability under the generating policy.
  double logprob = 0.0;
  /// False when the backend could not report a log-probability and 0 was
  /// substituted.
  bool logprob_available = true;
  /// The generator stopped after this sentence.
  bool end_of_response = false;

  bool operator==(const CandidateSentence&) const = default;
};

/// How a complete trajectory is scored from the edge values along its path.
enum class PathScore { sum, leaf, mean };

std::string_view to_string(PathScore score);
PathScore path_score_from_string(std::string_view name);

struct SearchConfig {
  double c_puct = 1.0;
  double length_penalty = 1.25;
  double discount = 1.0;
  int expansion_width = 4;
  double sim_threshold = 0.9;
  int budget = 64;
  int max_depth = 12;
  double temperature = 1.0;
  double q_margin = 0.05;
  std::uint64_t seed = 0;
  /// Upper bound on node evaluations, 0 for none. Used for equal-budget
  /// comparisons against the beam baseline.
  int eval_budget = 0;
  PathScore path_score = PathScore::sum;

  /// Throws ConfigError naming the first violated bound.
  void validate() const;

  bool operator==(const SearchConfig&) const = default;
};

struct Trajectory {
  SceneContext context;
  std::vector<Sentence> sentences;
  bool complete = false;
  double cumulative_q = 0.0;

  std::string text() const;
};

/// Joins sentence texts with single spaces.
std::string join_texts(const std::vector<std::string>& parts);

}  // namespace oscar
