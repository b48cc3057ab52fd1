#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oscar/core/errors.hpp"
#include "oscar/extraction/extraction.hpp"
#include "oscar/mcts/search.hpp"
#include "oscar/preference/preference.hpp"
#include "oscar/sim/policy.hpp"
#include "oscar/sim/world.hpp"

namespace oscar::dpo {

struct DpoConfig {
  double beta = 0.1;
  double learning_rate = 30.0;
  int epochs = 40;
  /// 0 means full batch.
  int batch_size = 0;
  int iterations = 3;
  std::uint64_t seed = 0;
  /// Per-source weights in the loss mean.
  double global_weight = 1.0;
  double sibling_weight = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool operator==(const DpoConfig&) const = default;
};

/// A preference pair resolved to template sequences of one scene.
struct ScoredPair {
  std::size_t scene = 0;
  std::vector<int> chosen;
  std::vector<int> rejected;
  double weight = 1.0;
};

/// Resolves the pair's texts against the world grammar; nullopt when either
/// side is not a template sequence of the pair's scene.
std::optional<ScoredPair> score_pair(const sim::SimWorld& world,
                                     const preference::PreferencePair& pair,
                                     const DpoConfig& config = {});

/// h = [log pi(y+) - log ref(y+)] - [log pi(y-) - log ref(y-)].
double log_ratio_term(const sim::ToyPolicy& policy, const sim::ToyPolicy& ref,
                      const sim::SimWorld& world, const ScoredPair& pair);

/// Weighted mean of -log sigmoid(beta * h). Throws ArgumentError on an empty
/// batch.
double dpo_loss(const sim::ToyPolicy& policy, const sim::ToyPolicy& ref,
                const sim::SimWorld& world, const std::vector<ScoredPair>& batch, double beta);

/// Exact gradient of dpo_loss with respect to policy.theta.
sim::PolicyGradient dpo_gradient(const sim::ToyPolicy& policy, const sim::ToyPolicy& ref,
                                 const sim::SimWorld& world,
                                 const std::vector<ScoredPair>& batch, double beta);

struct TrainResult {
  /// Full-batch loss before training and after every epoch.
  std::vector<double> loss_curve;
  int steps = 0;
};

/// Plain gradient descent on `policy` against the frozen `ref`.
TrainResult train(sim::ToyPolicy& policy, const sim::ToyPolicy& ref, const sim::SimWorld& world,
                  const std::vector<ScoredPair>& batch, const DpoConfig& config);

/// Greedy captions of every scene under `policy`.
std::vector<std::string> greedy_captions(const sim::SimWorld& world,
                                         const sim::ToyPolicy& policy);

/// CHAIR of the greedy captions; chair_i is the hallucinated-object rate.
extraction::ChairReport greedy_chair(const sim::SimWorld& world, const sim::ToyPolicy& policy);

struct IterationReport {
  int iteration = 0;
  std::size_t scenes = 0;
  std::size_t failed_searches = 0;
  std::size_t global_pairs = 0;
  std::size_t sibling_pairs = 0;
  std::size_t skipped_pairs = 0;
  double mean_q_margin = 0.0;
  long node_evaluations = 0;
  std::vector<double> loss_curve;
  extraction::ChairReport pre;
  extraction::ChairReport post;
  std::string policy_digest;
};

nlohmann::json to_json(const IterationReport& report);

/// Raised when an iteration extracts no usable pair; the policy is unchanged.
class IterationError : public Error {
 public:
  using Error::Error;
};

struct IterationOptions {
  SearchConfig search;
  DpoConfig dpo;
  int workers = 1;
};

struct IterationResult {
  sim::ToyPolicy policy;
  IterationReport report;
  std::vector<preference::PreferencePair> pairs;
};

/// One round: freeze the reference, search every scene with the current
/// policy, extract pairs, train by DPO.
IterationResult run_iteration(std::shared_ptr<const sim::SimWorld> world,
                              const sim::ToyPolicy& policy, int iteration,
                              const IterationOptions& options);

/// Seed used for the search of `scene` in `iteration`.
std::uint64_t search_seed(std::uint64_t base, int iteration, std::size_t scene);

/// SHA-256 of the policy's canonical JSON.
std::string policy_digest(const sim::ToyPolicy& policy);

}  // namespace oscar::dpo
