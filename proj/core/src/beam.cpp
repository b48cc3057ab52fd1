#include "oscar/baseline/beam.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "oscar/core/errors.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/core/text.hpp"

namespace oscar::baseline {

void BeamConfig::validate() const {
  if (beam_width < 2) throw ConfigError("beam_width must be at least 2");
  if (expansion_width < 1) throw ConfigError("expansion_width must be positive");
  if (max_depth < 1) throw ConfigError("max_depth must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (eval_budget < 0) throw ConfigError("eval_budget must be nonnegative");
}

namespace {

// Higher score first, then higher log-probability; stable for full ties.
bool better(const Beam& a, const Beam& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.logprob > b.logprob;
}

}  // namespace

BeamResult beam_search(const SceneContext& ctx, const BeamConfig& config,
                       backend::Backend& backend, const rewards::RewardOptions& options) {
  config.validate();
  BeamResult result;
  std::vector<Beam> active{Beam{}};
  bool budget_left = true;

  for (int depth = 1; depth <= config.max_depth && !active.empty() && budget_left; ++depth) {
    std::vector<Beam> grown;
    for (std::size_t b = 0; b < active.size() && budget_left; ++b) {
      const auto& beam = active[b];
      const auto seed = derive_seed(config.seed, {fnv1a64(ctx.image_ref), fnv1a64(beam.text),
                                                  static_cast<std::uint64_t>(depth)});
      std::vector<CandidateSentence> candidates;
      try {
        candidates = backend.generate_candidates(ctx, beam.text, config.expansion_width,
                                                 config.temperature, seed);
      } catch (const TransportError&) {
        continue;
      }
      std::set<std::string> seen;
      for (auto& c : candidates) {
        c.text = trim(c.text);
        if (c.text.empty() || !seen.insert(c.text).second) continue;
        if (config.eval_budget > 0 && result.node_evaluations >= config.eval_budget) {
          budget_left = false;
          break;
        }
        const auto r = rewards::process_reward(ctx, c.text, backend, options);
        ++result.node_evaluations;
        Beam next = beam;
        next.text = append_sentence(beam.text, c.text);
        next.sentences.push_back(Sentence{c.text, c.token_count, c.logprob});
        next.score += r.value;
        next.logprob += c.logprob;
        next.complete = c.end_of_response || depth == config.max_depth;
        grown.push_back(std::move(next));
      }
    }
    std::stable_sort(grown.begin(), grown.end(), better);
    if (grown.size() > static_cast<std::size_t>(config.beam_width)) {
      grown.resize(static_cast<std::size_t>(config.beam_width));
    }
    std::vector<double> scores;
    active.clear();
    for (auto& beam : grown) {
      scores.push_back(beam.score);
      if (beam.complete) {
        result.finished.push_back(std::move(beam));
      } else {
        active.push_back(std::move(beam));
      }
    }
    result.step_scores.push_back(std::move(scores));
  }

  std::stable_sort(result.finished.begin(), result.finished.end(), better);
  if (result.finished.size() >= 2 &&
      result.finished.front().text != result.finished.back().text) {
    preference::PreferencePair p;
    p.image_ref = ctx.image_ref;
    p.prompt = ctx.prompt;
    p.chosen = result.finished.front().text;
    p.rejected = result.finished.back().text;
    p.source = preference::PairSource::global_path;
    p.q_margin = result.finished.front().score - result.finished.back().score;
    result.pair = std::move(p);
  }
  return result;
}

std::optional<preference::PreferencePair> beam_search_pairs(
    const SceneContext& ctx, const BeamConfig& config, backend::Backend& backend,
    const rewards::RewardOptions& options) {
  return beam_search(ctx, config, backend, options).pair;
}

}  // namespace oscar::baseline
