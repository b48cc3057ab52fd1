#include "oscar/sim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oscar/core/errors.hpp"
#include "oscar/sim/world.hpp"

namespace oscar::sim {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log-sum-exp of theta[j] / temperature over `ids`.
double log_normalizer(const std::vector<double>& theta, double temperature,
                      const std::vector<int>& ids) {
  double top = kNegInf;
  for (int j : ids) top = std::max(top, theta[static_cast<std::size_t>(j)] / temperature);
  double sum = 0.0;
  for (int j : ids) sum += std::exp(theta[static_cast<std::size_t>(j)] / temperature - top);
  return top + std::log(sum);
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  return ids;
}

}  // namespace

ToyPolicy ToyPolicy::from_world(const SimWorld& world) {
  ToyPolicy policy;
  for (const auto& scene : world.scenes()) {
    std::vector<double> logits;
    logits.reserve(scene.templates.size());
    for (const auto& t : scene.templates) logits.push_back(t.prior_logit);
    policy.theta.push_back(std::move(logits));
  }
  return policy;
}

nlohmann::json ToyPolicy::to_json() const {
  return {{"temperature", temperature}, {"theta", theta}};
}

ToyPolicy ToyPolicy::from_json(const nlohmann::json& j) {
  ToyPolicy policy;
  try {
    policy.temperature = j.at("temperature").get<double>();
    policy.theta = j.at("theta").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed policy document: ") + e.what());
  }
  if (!(policy.temperature > 0.0)) throw ArgumentError("policy temperature must be positive");
  for (const auto& row : policy.theta) {
    for (double v : row) {
      if (!std::isfinite(v)) throw ArgumentError("policy weights must be finite");
    }
  }
  return policy;
}

std::size_t ToyPolicy::size() const {
  std::size_t n = 0;
  for (const auto& row : theta) n += row.size();
  return n;
}

PolicyGradient zero_gradient(const ToyPolicy& policy) {
  PolicyGradient grad;
  grad.reserve(policy.theta.size());
  for (const auto& row : policy.theta) grad.emplace_back(row.size(), 0.0);
  return grad;
}

double policy_logprob(const ToyPolicy& policy, std::size_t scene, int template_index) {
  const auto& theta = policy.theta.at(scene);
  if (template_index < 0 || static_cast<std::size_t>(template_index) >= theta.size()) {
    return kNegInf;
  }
  return theta[static_cast<std::size_t>(template_index)] / policy.temperature -
         log_normalizer(theta, policy.temperature, all_indices(theta.size()));
}

double masked_logprob(const ToyPolicy& policy, std::size_t scene, const std::vector<int>& mask,
                      int index) {
  if (std::find(mask.begin(), mask.end(), index) == mask.end()) return kNegInf;
  const auto& theta = policy.theta.at(scene);
  return theta[static_cast<std::size_t>(index)] / policy.temperature -
         log_normalizer(theta, policy.temperature, mask);
}

double response_logprob(const ToyPolicy& policy, const SimWorld& world, std::size_t scene,
                        const std::vector<int>& templates) {
  double total = 0.0;
  std::vector<int> used;
  for (int id : templates) {
    total += masked_logprob(policy, scene, world.available(scene, used), id);
    used.push_back(id);
  }
  return total;
}

void accumulate_response_gradient(const ToyPolicy& policy, const SimWorld& world,
                                  std::size_t scene, const std::vector<int>& templates,
                                  double scale, PolicyGradient& grad) {
  const auto& theta = policy.theta.at(scene);
  auto& g = grad.at(scene);
  std::vector<int> used;
  for (int id : templates) {
    const auto mask = world.available(scene, used);
    const double lz = log_normalizer(theta, policy.temperature, mask);
    for (int j : mask) {
      const double p = std::exp(theta[static_cast<std::size_t>(j)] / policy.temperature - lz);
      g[static_cast<std::size_t>(j)] -= scale * p / policy.temperature;
    }
    g[static_cast<std::size_t>(id)] += scale / policy.temperature;
    used.push_back(id);
  }
}

}  // namespace oscar::sim
