#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oscar/core/types.hpp"

namespace oscar::sim {

/// Role a template plays in the scene grammar.
enum class TemplateKind {
  plain,   // ordinary description sentence
  trap,    // faithful, but every successor leads into a forced hallucination
  bridge,  // faithful sentence reachable only after a trap
  lure,    // names a distractor; reachable only after a bridge
};

std::string_view to_string(TemplateKind kind);
TemplateKind template_kind_from_string(std::string_view name);

/// A concrete candidate sentence of one scene.
struct Template {
  std::string text;
  std::vector<std::string> objects;  // canonical names, in mention order
  TemplateKind kind = TemplateKind::plain;
  /// May open the caption or follow a sentence without successor constraint.
  bool entry = true;
  /// When non-empty, only these template indices may follow this one.
  std::vector<int> successors;
  /// Initial policy logit, the simulated language prior.
  double prior_logit = 0.0;

  bool operator==(const Template&) const = default;
};

struct SimScene {
  SceneContext context;
  std::set<std::string> distractors;
  std::vector<Template> templates;

  bool mentions_distractor(const Template& t) const;

  bool operator==(const SimScene&) const = default;
};

struct WorldParams {
  std::uint64_t seed = 7;
  int scene_count = 50;
  /// Fraction of object slots bound to a distractor (h).
  double hallucination_rate = 0.3;
  /// Probability mass the verifier puts on the correct answer (d).
  double disc_accuracy = 0.9;
  int min_objects = 3;
  int max_objects = 6;
  int distractors_per_scene = 4;
  int single_templates = 12;
  int pair_templates = 8;
  int sentences_per_caption = 3;
  double prior_stddev = 0.5;
  bool trap_scenes = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool operator==(const WorldParams&) const = default;
};

/// Deterministic synthetic vision-language world. Generation hallucinates
/// through distractor-bound templates; verification is right with mass d.
class SimWorld {
 public:
  static SimWorld generate(const WorldParams& params);

  static SimWorld from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const WorldParams& params() const { return params_; }
  const std::vector<SimScene>& scenes() const { return scenes_; }
  const SimScene& scene(std::size_t index) const { return scenes_.at(index); }
  std::size_t size() const { return scenes_.size(); }

  /// Scene index for an image reference of the form sim://scene/<i>.
  std::optional<std::size_t> scene_index(std::string_view image_ref) const;

  /// Verifier answer masses (P(Yes), P(No)) for "is `object` present?".
  /// Unknown names count as absent.
  std::pair<double, double> verify(std::size_t scene, std::string_view object) const;

  /// Probability that the verifier calls the sentence hallucination-free:
  /// the product over its mentioned objects of P(judged present).
  double sentence_clean_probability(std::size_t scene, std::string_view sentence) const;

  /// Template indices for each sentence of `text`, or nullopt if any sentence
  /// is not a template of the scene.
  std::optional<std::vector<int>> parse_response(std::size_t scene, std::string_view text) const;

  /// Templates allowed after `used` (in order). Empty means the grammar has no
  /// continuation.
  std::vector<int> available(std::size_t scene, const std::vector<int>& used) const;

  /// True when a response made of `used` templates cannot be extended.
  bool is_terminal(std::size_t scene, const std::vector<int>& used) const;

  /// 10 - 2 * redundant sentences - 3 * grammar violations, clamped to [0, 10].
  double quality(std::size_t scene, std::string_view caption) const;

  bool operator==(const SimWorld&) const = default;

 private:
  WorldParams params_;
  std::vector<SimScene> scenes_;
};

std::string scene_image_ref(std::size_t index);

inline constexpr std::string_view kScenePrompt = "Describe this image in detail.";

}  // namespace oscar::sim
