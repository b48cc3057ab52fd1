#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oscar/backend/backend.hpp"
#include "oscar/preference/preference.hpp"
#include "oscar/rewards/rewards.hpp"

namespace oscar::baseline {

struct BeamConfig {
  int beam_width = 4;
  /// Candidates requested per beam and step.
  int expansion_width = 4;
  int max_depth = 12;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Upper bound on node evaluations, 0 for none.
  int eval_budget = 0;

  /// Throws ConfigError; beam_width must be at least 2.
  void validate() const;
};

struct Beam {
  std::string text;
  std::vector<Sentence> sentences;
  /// Cumulative process reward.
  double score = 0.0;
  /// Cumulative policy log-probability, the tie-breaker.
  double logprob = 0.0;
  bool complete = false;
};

struct BeamResult {
  /// Completed beams, best first.
  std::vector<Beam> finished;
  /// Beam scores after each step, best first.
  std::vector<std::vector<double>> step_scores;
  int node_evaluations = 0;
  std::optional<preference::PreferencePair> pair;
};

/// Beam search scored by cumulative r_proc only (no rollouts). Chosen is the
/// best completed beam and rejected the worst.
BeamResult beam_search(const SceneContext& ctx, const BeamConfig& config,
                       backend::Backend& backend, const rewards::RewardOptions& options = {});

std::optional<preference::PreferencePair> beam_search_pairs(
    const SceneContext& ctx, const BeamConfig& config, backend::Backend& backend,
    const rewards::RewardOptions& options = {});

}  // namespace oscar::baseline
