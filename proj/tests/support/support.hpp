#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oscar/backend/backend.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/core/types.hpp"
#include "oscar/extraction/dictionary.hpp"
#include "oscar/extraction/extraction.hpp"
#include "oscar/sim/policy.hpp"
#include "oscar/sim/sim_backend.hpp"
#include "oscar/sim/world.hpp"

namespace oscar::testing {

std::filesystem::path fixture_path(const std::string& name);
std::filesystem::path data_path(const std::string& name);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// World, policy and backend bundled for tests.
struct SimFixture {
  std::shared_ptr<const sim::SimWorld> world;
  std::shared_ptr<const sim::ToyPolicy> policy;
  std::shared_ptr<sim::SimBackend> backend;

  SceneContext context(std::size_t scene) const { return world->scene(scene).context; }
};

SimFixture make_sim(const sim::WorldParams& params = {});
SimFixture make_sim(const sim::WorldParams& params, const sim::ToyPolicy& policy);

/// Backend driven by lookup tables, for hand-computed search examples.
/// Candidates are keyed by prefix; missing prefixes return nothing.
/// Process reward P(No) is keyed by sentence (default `default_p_no`).
/// Rollouts are keyed by prefix (default: prefix unchanged). Quality scores
/// are keyed by caption (default `default_quality`).
class ScriptedBackend : public backend::Backend {
 public:
  std::map<std::string, std::vector<CandidateSentence>> candidates;
  std::map<std::string, double> p_no;
  std::map<std::string, std::string> rollouts;
  std::map<std::string, double> quality;
  double default_p_no = 1.0;
  double default_quality = 10.0;
  /// Any call whose prefix/sentence/caption is in this set throws TransportError.
  std::set<std::string> failing;
  bool fail_everything = false;

  std::vector<CandidateSentence> generate_candidates(const SceneContext& ctx,
                                                     std::string_view prefix, int k,
                                                     double temperature,
                                                     std::uint64_t seed) override;
  std::vector<double> choice_probability(const backend::ChoiceQuery& query) override;
  std::string greedy_rollout(const SceneContext& ctx, std::string_view prefix,
                             int max_sentences) override;
  double quality_score(const SceneContext& ctx, std::string_view caption) override;
  std::string descriptor() const override { return "scripted"; }

  int generate_calls() const { return generate_calls_; }
  int choice_calls() const { return choice_calls_; }
  int rollout_calls() const { return rollout_calls_; }
  int quality_calls() const { return quality_calls_; }

 private:
  std::atomic<int> generate_calls_{0};
  std::atomic<int> choice_calls_{0};
  std::atomic<int> rollout_calls_{0};
  std::atomic<int> quality_calls_{0};
};

CandidateSentence candidate(std::string text, double logprob = -1.0, int tokens = 0,
                            bool end = false);

// Independent reference implementations used as test oracles. They are
// written from the formulas, not from the library code.

/// argmax_i of Q + c * p * sqrt(N) / (1 + n_i), ties to the lowest index.
std::size_t puct_oracle(const std::vector<double>& q, const std::vector<double>& prior,
                        const std::vector<int>& edge_visits, int parent_visits, double c);

/// exp(lp) / tokens^lambda, normalized, by direct division in long double.
std::vector<double> prior_oracle(const std::vector<double>& logprobs,
                                 const std::vector<int>& tokens, double lambda);

/// Greedy filtering with a pairwise similarity matrix.
std::vector<std::size_t> filter_oracle(const std::vector<std::vector<double>>& sim,
                                       double threshold);

/// Cosine of word-count vectors computed through explicit dense vectors.
double cosine_oracle(const std::string& a, const std::string& b);

/// Caption built from known canonical mentions, with the ground truth it
/// was generated against.
struct SyntheticCaption {
  std::string text;
  std::vector<std::string> mentions;  // canonical, with multiplicity
  SceneContext context;
};

std::vector<SyntheticCaption> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                               const extraction::SynonymDictionary& dict);

/// CHAIR counts from the generation records, without any text processing.
extraction::ChairReport chair_oracle(const std::vector<SyntheticCaption>& corpus);

}  // namespace oscar::testing
