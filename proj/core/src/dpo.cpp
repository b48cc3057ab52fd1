#include "oscar/dpo/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oscar/core/digest.hpp"
#include "oscar/core/parallel.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/sim/sim_backend.hpp"

namespace oscar::dpo {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double total_weight(const std::vector<ScoredPair>& batch) {
  double w = 0.0;
  for (const auto& p : batch) w += p.weight;
  return w;
}

}  // namespace

void DpoConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (batch_size < 0) throw ConfigError("batch_size must be nonnegative");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(global_weight >= 0.0) || !(sibling_weight >= 0.0) ||
      global_weight + sibling_weight <= 0.0) {
    throw ConfigError("pair weights must be nonnegative and not both zero");
  }
}

std::optional<ScoredPair> score_pair(const sim::SimWorld& world,
                                     const preference::PreferencePair& pair,
                                     const DpoConfig& config) {
  const auto scene = world.scene_index(pair.image_ref);
  if (!scene) return std::nullopt;
  auto chosen = world.parse_response(*scene, pair.chosen);
  auto rejected = world.parse_response(*scene, pair.rejected);
  if (!chosen || !rejected || chosen->empty() || rejected->empty()) return std::nullopt;
  ScoredPair s;
  s.scene = *scene;
  s.chosen = std::move(*chosen);
  s.rejected = std::move(*rejected);
  s.weight = pair.source == preference::PairSource::sibling ? config.sibling_weight
                                                            : config.global_weight;
  return s;
}

double log_ratio_term(const sim::ToyPolicy& policy, const sim::ToyPolicy& ref,
                      const sim::SimWorld& world, const ScoredPair& pair) {
  const double chosen = sim::response_logprob(policy, world, pair.scene, pair.chosen) -
                        sim::response_logprob(ref, world, pair.scene, pair.chosen);
  const double rejected = sim::response_logprob(policy, world, pair.scene, pair.rejected) -
                          sim::response_logprob(ref, world, pair.scene, pair.rejected);
  return chosen - rejected;
}

double dpo_loss(const sim::ToyPolicy& policy, const sim::ToyPolicy& ref,
                const sim::SimWorld& world, const std::vector<ScoredPair>& batch, double beta) {
  if (batch.empty()) throw ArgumentError("dpo_loss: empty batch");
  const double w = total_weight(batch);
  if (!(w > 0.0)) throw ArgumentError("dpo_loss: batch has zero total weight");
  double sum = 0.0;
  for (const auto& p : batch) sum += p.weight * softplus(-beta * log_ratio_term(policy, ref, world, p));
  return sum / w;
}

sim::PolicyGradient dpo_gradient(const sim::ToyPolicy& policy, const sim::ToyPolicy& ref,
                                 const sim::SimWorld& world,
                                 const std::vector<ScoredPair>& batch, double beta) {
  if (batch.empty()) throw ArgumentError("dpo_gradient: empty batch");
  const double w = total_weight(batch);
  if (!(w > 0.0)) throw ArgumentError("dpo_gradient: batch has zero total weight");
  auto grad = sim::zero_gradient(policy);
  for (const auto& p : batch) {
    const double h = log_ratio_term(policy, ref, world, p);
    // d softplus(-beta h) / dh = -beta * sigmoid(-beta h)
    const double dh = -beta * sigmoid(-beta * h) * p.weight / w;
    sim::accumulate_response_gradient(policy, world, p.scene, p.chosen, dh, grad);
    sim::accumulate_response_gradient(policy, world, p.scene, p.rejected, -dh, grad);
  }
  return grad;
}

TrainResult train(sim::ToyPolicy& policy, const sim::ToyPolicy& ref, const sim::SimWorld& world,
                  const std::vector<ScoredPair>& batch, const DpoConfig& config) {
  config.validate();
  TrainResult result;
  result.loss_curve.push_back(dpo_loss(policy, ref, world, batch, config.beta));
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t step_size =
      config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size) : batch.size();

  auto step = [&](const std::vector<ScoredPair>& minibatch) {
    const auto grad = dpo_gradient(policy, ref, world, minibatch, config.beta);
    for (std::size_t s = 0; s < grad.size(); ++s) {
      for (std::size_t j = 0; j < grad[s].size(); ++j) {
        policy.theta[s][j] -= config.learning_rate * grad[s][j];
      }
    }
    ++result.steps;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (step_size >= batch.size()) {
      step(batch);
    } else {
      Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(epoch)}));
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
      }
      for (std::size_t start = 0; start < order.size(); start += step_size) {
        std::vector<ScoredPair> minibatch;
        for (std::size_t k = start; k < std::min(order.size(), start + step_size); ++k) {
          minibatch.push_back(batch[order[k]]);
        }
        step(minibatch);
      }
    }
    result.loss_curve.push_back(dpo_loss(policy, ref, world, batch, config.beta));
  }
  return result;
}

std::vector<std::string> greedy_captions(const sim::SimWorld& world,
                                         const sim::ToyPolicy& policy) {
  auto world_ptr = std::shared_ptr<const sim::SimWorld>(&world, [](const sim::SimWorld*) {});
  sim::SimBackend backend(world_ptr, std::make_shared<const sim::ToyPolicy>(policy));
  std::vector<std::string> captions;
  captions.reserve(world.size());
  for (const auto& scene : world.scenes()) {
    captions.push_back(
        backend.greedy_rollout(scene.context, "", world.params().sentences_per_caption));
  }
  return captions;
}

extraction::ChairReport greedy_chair(const sim::SimWorld& world, const sim::ToyPolicy& policy) {
  std::vector<SceneContext> contexts;
  contexts.reserve(world.size());
  for (const auto& scene : world.scenes()) contexts.push_back(scene.context);
  return extraction::chair(greedy_captions(world, policy), contexts,
                           extraction::SynonymDictionary::coco_default());
}

namespace {

nlohmann::json chair_json(const extraction::ChairReport& r) {
  return nlohmann::json{{"chair_s", r.chair_s},
                        {"chair_i", r.chair_i},
                        {"captions", r.captions},
                        {"hallucinated_captions", r.hallucinated_captions},
                        {"mentions", r.mentions},
                        {"hallucinated_mentions", r.hallucinated_mentions}};
}

}  // namespace

nlohmann::json to_json(const IterationReport& r) {
  return nlohmann::json{{"iteration", r.iteration},
                        {"scenes", r.scenes},
                        {"failed_searches", r.failed_searches},
                        {"global_pairs", r.global_pairs},
                        {"sibling_pairs", r.sibling_pairs},
                        {"skipped_pairs", r.skipped_pairs},
                        {"mean_q_margin", r.mean_q_margin},
                        {"node_evaluations", r.node_evaluations},
                        {"loss_curve", r.loss_curve},
                        {"pre", chair_json(r.pre)},
                        {"post", chair_json(r.post)},
                        {"policy_digest", r.policy_digest}};
}

std::uint64_t search_seed(std::uint64_t base, int iteration, std::size_t scene) {
  return derive_seed(base, {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(scene)});
}

std::string policy_digest(const sim::ToyPolicy& policy) {
  return sha256_hex(policy.to_json().dump());
}

IterationResult run_iteration(std::shared_ptr<const sim::SimWorld> world,
                              const sim::ToyPolicy& policy, int iteration,
                              const IterationOptions& options) {
  options.search.validate();
  options.dpo.validate();

  // The reference is a frozen copy taken before any search of this round.
  const auto ref = std::make_shared<const sim::ToyPolicy>(policy);
  sim::SimBackend backend(world, ref);

  IterationReport report;
  report.iteration = iteration;
  report.scenes = world->size();
  report.pre = greedy_chair(*world, *ref);

  struct SceneOutcome {
    std::vector<preference::PreferencePair> pairs;
    int evaluations = 0;
    bool failed = false;
  };
  std::vector<SceneOutcome> outcomes(world->size());
  parallel_for(world->size(), options.workers, [&](std::size_t i) {
    auto cfg = options.search;
    cfg.seed = search_seed(options.search.seed, iteration, i);
    try {
      const auto tree = mcts::run_search(world->scene(i).context, cfg, backend);
      outcomes[i].pairs = preference::extract_pairs(tree, iteration);
      outcomes[i].evaluations = tree.node_evaluations;
    } catch (const mcts::SearchError& e) {
      outcomes[i].failed = true;
      outcomes[i].evaluations = e.partial_tree().node_evaluations;
    }
  });

  IterationResult result;
  std::vector<ScoredPair> batch;
  double margin_sum = 0.0;
  for (auto& o : outcomes) {
    report.node_evaluations += o.evaluations;
    if (o.failed) ++report.failed_searches;
    for (auto& pair : o.pairs) {
      auto scored = score_pair(*world, pair, options.dpo);
      if (!scored || scored->weight <= 0.0) {
        ++report.skipped_pairs;
        continue;
      }
      if (pair.source == preference::PairSource::sibling) {
        ++report.sibling_pairs;
      } else {
        ++report.global_pairs;
      }
      margin_sum += pair.q_margin;
      batch.push_back(std::move(*scored));
      result.pairs.push_back(std::move(pair));
    }
  }
  if (batch.empty()) {
    throw IterationError("iteration " + std::to_string(iteration) +
                         ": no preference pairs extracted from " +
                         std::to_string(world->size()) + " scenes");
  }
  report.mean_q_margin = margin_sum / static_cast<double>(batch.size());

  result.policy = *ref;
  auto dpo_cfg = options.dpo;
  dpo_cfg.seed = derive_seed(options.dpo.seed, {static_cast<std::uint64_t>(iteration)});
  report.loss_curve = train(result.policy, *ref, *world, batch, dpo_cfg).loss_curve;
  report.post = greedy_chair(*world, result.policy);
  report.policy_digest = policy_digest(result.policy);
  result.report = std::move(report);
  return result;
}

}  // namespace oscar::dpo
