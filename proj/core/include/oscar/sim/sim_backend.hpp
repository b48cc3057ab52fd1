#pragma once

#include <memory>

#include "oscar/backend/backend.hpp"
#include "oscar/sim/policy.hpp"
#include "oscar/sim/world.hpp"

namespace oscar::sim {

/// Offline Backend over a SimWorld and a ToyPolicy. Stateless apart from
/// const references, so it is safe to share between threads.
class SimBackend final : public backend::Backend {
 public:
  SimBackend(std::shared_ptr<const SimWorld> world, std::shared_ptr<const ToyPolicy> policy);

  std::vector<CandidateSentence> generate_candidates(const SceneContext& ctx,
                                                     std::string_view prefix, int k,
                                                     double temperature,
                                                     std::uint64_t seed) override;
  std::vector<double> choice_probability(const backend::ChoiceQuery& query) override;
  std::string greedy_rollout(const SceneContext& ctx, std::string_view prefix,
                             int max_sentences) override;
  double quality_score(const SceneContext& ctx, std::string_view caption) override;
  std::string descriptor() const override;

  const SimWorld& world() const { return *world_; }
  const ToyPolicy& policy() const { return *policy_; }

  std::size_t scene_of(const SceneContext& ctx) const;

 private:
  std::shared_ptr<const SimWorld> world_;
  std::shared_ptr<const ToyPolicy> policy_;
};

/// Temperatures at or below this are treated as greedy decoding.
inline constexpr double kGreedyTemperature = 1e-3;

/// Samples up to k distinct templates from `mask` with softmax(theta / (policy
/// temperature * temperature)) without replacement (Gumbel top-k). Greedy
/// below kGreedyTemperature, ties to the lowest index.
std::vector<int> sample_templates(const ToyPolicy& policy, std::size_t scene,
                                  const std::vector<int>& mask, int k, double temperature,
                                  std::uint64_t stream_seed);

}  // namespace oscar::sim
