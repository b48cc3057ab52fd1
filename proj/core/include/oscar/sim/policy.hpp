#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

namespace oscar::sim {

class SimWorld;

/// Softmax sentence-selection policy: one logit per (scene, template).
struct ToyPolicy {
  std::vector<std::vector<double>> theta;
  double temperature = 1.0;

  /// Logits initialised from the world's language prior.
  static ToyPolicy from_world(const SimWorld& world);

  static ToyPolicy from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Number of scalar parameters.
  std::size_t size() const;

  bool operator==(const ToyPolicy&) const = default;
};

/// Gradient buffer with the same shape as ToyPolicy::theta.
using PolicyGradient = std::vector<std::vector<double>>;

PolicyGradient zero_gradient(const ToyPolicy& policy);

/// log softmax(theta / temperature) of one template over all templates of the
/// scene. Returns -inf for an unknown template index.
double policy_logprob(const ToyPolicy& policy, std::size_t scene, int template_index);

/// Log-probability of `index` among `mask` only. -inf when not in the mask.
double masked_logprob(const ToyPolicy& policy, std::size_t scene, const std::vector<int>& mask,
                      int index);

/// Sum of per-step masked log-probabilities of a template sequence under the
/// world grammar (no repeats, successor constraints).
double response_logprob(const ToyPolicy& policy, const SimWorld& world, std::size_t scene,
                        const std::vector<int>& templates);

/// Adds scale * d(response_logprob)/d(theta) to `grad`.
void accumulate_response_gradient(const ToyPolicy& policy, const SimWorld& world,
                                  std::size_t scene, const std::vector<int>& templates,
                                  double scale, PolicyGradient& grad);

}  // namespace oscar::sim
