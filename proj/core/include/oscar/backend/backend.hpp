#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oscar/core/types.hpp"

namespace oscar::backend {

/// Answer-choice query, e.g. the sentence verification prompt with choices
/// {"Yes", "No"}.
struct ChoiceQuery {
  std::string image_ref;
  std::string prompt_text;
  std::vector<std::string> choices;

  /// Throws ArgumentError unless there are at least two distinct choices.
  void validate() const;
};

/// Every consumer of model capability goes through this interface.
/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Up to `k` single-sentence continuations of `prefix`. Fewer than `k` is not
  /// an error. `seed` selects the sampling stream for backends that honour it.
  virtual std::vector<CandidateSentence> generate_candidates(const SceneContext& ctx,
                                                             std::string_view prefix, int k,
                                                             double temperature,
                                                             std::uint64_t seed) = 0;

  /// Probability of each choice, renormalized over the given choices.
  virtual std::vector<double> choice_probability(const ChoiceQuery& query) = 0;

  /// Greedy completion of `prefix` to an end marker or `max_sentences`
  /// sentences in total. A terminal prefix is returned unchanged.
  virtual std::string greedy_rollout(const SceneContext& ctx, std::string_view prefix,
                                     int max_sentences) = 0;

  /// Overall caption quality in [0, 10]. Throws ScoringError when the reply
  /// has no number.
  virtual double quality_score(const SceneContext& ctx, std::string_view caption) = 0;

  /// Short human-readable identity recorded in run manifests.
  virtual std::string descriptor() const = 0;

  /// True when independent calls benefit from being issued concurrently.
  virtual bool prefers_parallel_evaluation() const { return false; }
};

/// Softmax over raw per-choice log-probabilities. -inf entries get zero mass.
/// Throws ArgumentError if every entry is -inf.
std::vector<double> renormalize_logprobs(const std::vector<double>& logprobs);

/// First number in the reply, clamped to [0, 10]. Throws ScoringError if the
/// reply contains no number.
double parse_quality_score(std::string_view reply);

/// Index of the choice a free-text answer refers to, or -1. Matches the choice
/// text itself, its letter label ("B", "(B)") or "(B) No" case-insensitively.
int match_choice(std::string_view answer, const std::vector<std::string>& choices);

/// Vote-share estimate used when log-probabilities are unavailable.
std::vector<double> vote_probability(const std::vector<std::string>& samples,
                                     const std::vector<std::string>& choices);

/// Number of samples drawn by the vote fallback.
inline constexpr int kVoteSamples = 16;

}  // namespace oscar::backend
