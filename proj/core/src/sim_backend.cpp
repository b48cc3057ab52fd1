#include "oscar/sim/sim_backend.hpp"

#include <algorithm>
#include <numeric>
#include <regex>

#include "oscar/core/errors.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/core/text.hpp"

namespace oscar::sim {
namespace {

int find_choice(const std::vector<std::string>& choices, std::string_view wanted) {
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (to_lower(trim(choices[i])) == wanted) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::vector<int> sample_templates(const ToyPolicy& policy, std::size_t scene,
                                  const std::vector<int>& mask, int k, double temperature,
                                  std::uint64_t stream_seed) {
  const auto& theta = policy.theta.at(scene);
  std::vector<std::pair<double, int>> keyed;
  keyed.reserve(mask.size());
  if (temperature <= kGreedyTemperature) {
    for (int j : mask) keyed.emplace_back(theta[static_cast<std::size_t>(j)], j);
  } else {
    Rng rng(stream_seed);
    const double scale = policy.temperature * temperature;
    for (int j : mask) {
      keyed.emplace_back(theta[static_cast<std::size_t>(j)] / scale + rng.gumbel(), j);
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < keyed.size() && static_cast<int>(i) < k; ++i) {
    out.push_back(keyed[i].second);
  }
  return out;
}

SimBackend::SimBackend(std::shared_ptr<const SimWorld> world,
                       std::shared_ptr<const ToyPolicy> policy)
    : world_(std::move(world)), policy_(std::move(policy)) {
  if (!world_ || !policy_) throw ArgumentError("SimBackend needs a world and a policy");
  if (policy_->theta.size() != world_->size()) {
    throw ArgumentError("policy shape does not match the world");
  }
}

std::size_t SimBackend::scene_of(const SceneContext& ctx) const {
  if (auto idx = world_->scene_index(ctx.image_ref)) return *idx;
  throw ArgumentError("image '" + ctx.image_ref + "' is not a scene of the simulated world");
}

std::vector<CandidateSentence> SimBackend::generate_candidates(const SceneContext& ctx,
                                                               std::string_view prefix, int k,
                                                               double temperature,
                                                               std::uint64_t seed) {
  if (k < 1) throw ArgumentError("generate_candidates: k must be at least 1");
  const std::size_t scene = scene_of(ctx);
  const auto parsed = world_->parse_response(scene, prefix);
  const std::vector<int> used = parsed.value_or(std::vector<int>{});
  const int depth = static_cast<int>(split_sentence_texts(prefix).size());
  if (depth >= world_->params().sentences_per_caption) return {};
  const auto mask = world_->available(scene, used);
  const std::uint64_t stream =
      derive_seed(world_->params().seed, {seed, scene, fnv1a64(prefix)});
  const auto picks = sample_templates(*policy_, scene, mask, k, temperature, stream);

  std::vector<CandidateSentence> out;
  const auto& templates = world_->scene(scene).templates;
  for (int id : picks) {
    CandidateSentence c;
    c.text = templates[static_cast<std::size_t>(id)].text;
    c.token_count = std::max(1, whitespace_token_count(c.text));
    c.logprob = masked_logprob(*policy_, scene, mask, id);
    auto next = used;
    next.push_back(id);
    c.end_of_response = depth + 1 >= world_->params().sentences_per_caption ||
                        world_->available(scene, next).empty();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<double> SimBackend::choice_probability(const backend::ChoiceQuery& query) {
  query.validate();
  const int yes = find_choice(query.choices, "yes");
  const int no = find_choice(query.choices, "no");
  if (yes < 0 || no < 0 || query.choices.size() != 2) {
    throw ArgumentError("simulator only answers Yes/No questions");
  }
  const auto scene = world_->scene_index(query.image_ref);
  if (!scene) throw ArgumentError("image '" + query.image_ref + "' is not a simulated scene");

  static const std::regex kProbe(R"(^\s*Is there (?:a/an|an|a) (.+) in the image\?\s*$)",
                                 std::regex::icase);
  std::smatch m;
  std::vector<double> probs(2, 0.0);
  double p_yes = 0.0;
  if (std::regex_match(query.prompt_text, m, kProbe)) {
    p_yes = world_->verify(*scene, m[1].str()).first;
  } else {
    p_yes = 1.0 - world_->sentence_clean_probability(*scene, query.prompt_text);
  }
  probs[static_cast<std::size_t>(yes)] = p_yes;
  probs[static_cast<std::size_t>(no)] = 1.0 - p_yes;
  return probs;
}

std::string SimBackend::greedy_rollout(const SceneContext& ctx, std::string_view prefix,
                                       int max_sentences) {
  const std::size_t scene = scene_of(ctx);
  std::vector<int> used = world_->parse_response(scene, prefix).value_or(std::vector<int>{});
  const int limit = std::min(max_sentences, world_->params().sentences_per_caption);
  int depth = static_cast<int>(split_sentence_texts(prefix).size());
  const auto& templates = world_->scene(scene).templates;
  std::string out(prefix);
  while (depth < limit) {
    const auto mask = world_->available(scene, used);
    if (mask.empty()) break;
    const int pick = sample_templates(*policy_, scene, mask, 1, 0.0, 0).front();
    used.push_back(pick);
    out = append_sentence(out, templates[static_cast<std::size_t>(pick)].text);
    ++depth;
  }
  return out;
}

double SimBackend::quality_score(const SceneContext& ctx, std::string_view caption) {
  if (trim(caption).empty()) throw ArgumentError("quality_score: empty caption");
  return world_->quality(scene_of(ctx), caption);
}

std::string SimBackend::descriptor() const {
  const auto& p = world_->params();
  return "simulator(seed=" + std::to_string(p.seed) + ", scenes=" + std::to_string(world_->size()) +
         ", h=" + std::to_string(p.hallucination_rate) + ", d=" + std::to_string(p.disc_accuracy) +
         (p.trap_scenes ? ", traps" : "") + ")";
}

}  // namespace oscar::sim
