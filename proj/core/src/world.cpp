#include "oscar/sim/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "oscar/core/errors.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/core/text.hpp"
#include "oscar/extraction/dictionary.hpp"
#include "oscar/extraction/extraction.hpp"

namespace oscar::sim {
namespace {

constexpr std::string_view kImagePrefix = "sim://scene/";

// {0} and {1} stand for "<article> <object>".
const std::vector<std::string>& single_patterns() {
  static const std::vector<std::string> kPatterns = {
      "There is {0} in the image.",     "{0} can be seen in the picture.",
      "The photo shows {0}.",           "I can also see {0}.",
      "{0} is visible in the scene.",   "In the background there is {0}.",
      "The scene includes {0}.",        "Nearby, there is {0}."};
  return kPatterns;
}

const std::vector<std::string>& pair_patterns() {
  static const std::vector<std::string> kPatterns = {
      "{0} is next to {1}.", "There is {0} near {1}.", "{0} sits beside {1}.",
      "The image shows {0} and {1}.", "{0} and {1} appear together."};
  return kPatterns;
}

std::string noun_phrase(const std::string& object) {
  return std::string(extraction::indefinite_article(object)) + " " + object;
}

std::string render(const std::string& pattern, const std::vector<std::string>& objects) {
  std::string out = pattern;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string slot = "{" + std::to_string(i) + "}";
    const auto pos = out.find(slot);
    if (pos != std::string::npos) out.replace(pos, slot.size(), noun_phrase(objects[i]));
  }
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

template <typename T>
void fisher_yates(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(items.size()) - 1))];
}

// Draws distinct objects for one template from the given pools.
std::vector<std::string> draw_objects(const std::vector<bool>& distractor_slot,
                                      const std::vector<std::string>& truth,
                                      const std::vector<std::string>& distractors, Rng& rng) {
  std::vector<std::string> out;
  for (bool is_distractor : distractor_slot) {
    const auto& pool = is_distractor ? distractors : truth;
    std::string choice;
    do {
      choice = pick(pool, rng);
    } while (std::find(out.begin(), out.end(), choice) != out.end());
    out.push_back(choice);
  }
  return out;
}

struct SceneBuilder {
  std::vector<Template> templates;
  std::set<std::string> texts;

  // Adds a template with a unique text; resamples pattern and objects.
  void add(const std::vector<bool>& slots, const std::vector<std::string>& truth,
           const std::vector<std::string>& distractors, TemplateKind kind, double prior,
           Rng& rng) {
    const auto& patterns = slots.size() == 1 ? single_patterns() : pair_patterns();
    for (int attempt = 0; attempt < 200; ++attempt) {
      auto objects = draw_objects(slots, truth, distractors, rng);
      std::string text = render(pick(patterns, rng), objects);
      if (texts.insert(text).second) {
        Template t;
        t.text = std::move(text);
        t.objects = std::move(objects);
        t.kind = kind;
        t.prior_logit = prior;
        templates.push_back(std::move(t));
        return;
      }
    }
    throw Error("simulator: could not draw a unique template");
  }
};

SimScene make_plain_scene(const WorldParams& p, const std::vector<std::string>& truth,
                          const std::vector<std::string>& distractors, Rng& rng) {
  const int slots_total = p.single_templates + 2 * p.pair_templates;
  const int bad = static_cast<int>(std::lround(p.hallucination_rate * slots_total));
  std::vector<bool> slot_bad(static_cast<std::size_t>(slots_total), false);
  for (int i = 0; i < bad; ++i) slot_bad[static_cast<std::size_t>(i)] = true;
  fisher_yates(slot_bad, rng);

  SceneBuilder builder;
  std::size_t cursor = 0;
  for (int i = 0; i < p.single_templates; ++i) {
    builder.add({slot_bad[cursor]}, truth, distractors, TemplateKind::plain,
                rng.normal(0.0, p.prior_stddev), rng);
    cursor += 1;
  }
  for (int i = 0; i < p.pair_templates; ++i) {
    builder.add({slot_bad[cursor], slot_bad[cursor + 1]}, truth, distractors, TemplateKind::plain,
                rng.normal(0.0, p.prior_stddev), rng);
    cursor += 2;
  }
  SimScene scene;
  scene.templates = std::move(builder.templates);
  return scene;
}

// Two attractive faithful openers whose only continuations are faithful
// bridge sentences, whose only continuations in turn name a distractor.
SimScene make_trap_scene(const WorldParams& p, const std::vector<std::string>& truth,
                         const std::vector<std::string>& distractors, Rng& rng) {
  SceneBuilder builder;
  constexpr int kTraps = 2;
  constexpr int kBridges = 4;
  const int lures = static_cast<int>(distractors.size());
  for (int i = 0; i < kTraps; ++i) {
    builder.add({false}, truth, distractors, TemplateKind::trap, 2.0 + rng.normal(0.0, 0.1), rng);
  }
  for (int i = 0; i < kBridges; ++i) {
    builder.add({false}, truth, distractors, TemplateKind::bridge, 1.0, rng);
  }
  for (int i = 0; i < lures; ++i) {
    builder.add({true}, truth, distractors, TemplateKind::lure, 1.0, rng);
  }
  for (int i = 0; i < p.pair_templates; ++i) {
    builder.add({false, false}, truth, distractors, TemplateKind::plain,
                rng.normal(0.0, 0.3 * p.prior_stddev), rng);
  }
  auto& ts = builder.templates;
  std::vector<int> bridge_ids;
  std::vector<int> lure_ids;
  for (int i = 0; i < kBridges; ++i) bridge_ids.push_back(kTraps + i);
  for (int i = 0; i < lures; ++i) lure_ids.push_back(kTraps + kBridges + i);
  for (int i = 0; i < kTraps; ++i) ts[static_cast<std::size_t>(i)].successors = bridge_ids;
  for (int id : bridge_ids) {
    ts[static_cast<std::size_t>(id)].entry = false;
    ts[static_cast<std::size_t>(id)].successors = lure_ids;
  }
  for (int id : lure_ids) ts[static_cast<std::size_t>(id)].entry = false;
  SimScene scene;
  scene.templates = std::move(ts);
  return scene;
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::plain:
      return "plain";
    case TemplateKind::trap:
      return "trap";
    case TemplateKind::bridge:
      return "bridge";
    case TemplateKind::lure:
      return "lure";
  }
  return "plain";
}

TemplateKind template_kind_from_string(std::string_view name) {
  if (name == "plain") return TemplateKind::plain;
  if (name == "trap") return TemplateKind::trap;
  if (name == "bridge") return TemplateKind::bridge;
  if (name == "lure") return TemplateKind::lure;
  throw ArgumentError("unknown template kind '" + std::string(name) + "'");
}

bool SimScene::mentions_distractor(const Template& t) const {
  return std::any_of(t.objects.begin(), t.objects.end(),
                     [&](const std::string& o) { return context.gt_objects.count(o) == 0; });
}

void WorldParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid world parameters: ") + what);
  };
  require(scene_count >= 1, "scene_count must be positive");
  require(hallucination_rate >= 0.0 && hallucination_rate <= 1.0,
          "hallucination_rate must lie in [0, 1]");
  require(disc_accuracy >= 0.0 && disc_accuracy <= 1.0, "disc_accuracy must lie in [0, 1]");
  require(min_objects >= 3 && max_objects >= min_objects, "need 3 <= min_objects <= max_objects");
  require(distractors_per_scene >= 2, "distractors_per_scene must be at least 2");
  require(single_templates >= 0 && pair_templates >= 0 && single_templates + pair_templates >= 2,
          "need at least two templates per scene");
  require(sentences_per_caption >= 1, "sentences_per_caption must be positive");
  require(prior_stddev >= 0.0, "prior_stddev must be nonnegative");
  const auto vocab = extraction::SynonymDictionary::coco_default().vocabulary().size();
  require(static_cast<std::size_t>(max_objects + distractors_per_scene) <= vocab,
          "more objects per scene than dictionary categories");
}

SimWorld SimWorld::generate(const WorldParams& params) {
  params.validate();
  SimWorld world;
  world.params_ = params;
  const auto& vocab_set = extraction::SynonymDictionary::coco_default().vocabulary();
  const std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());
  Rng rng(derive_seed(params.seed, {fnv1a64("world")}));

  for (int s = 0; s < params.scene_count; ++s) {
    const int min_true = params.trap_scenes ? std::max(params.min_objects, 3) : params.min_objects;
    const auto n_true = static_cast<std::size_t>(rng.uniform_int(min_true, params.max_objects));
    std::vector<std::string> order = vocab;
    // Partial Fisher-Yates: only the first n_true + distractors positions matter.
    const std::size_t needed = n_true + static_cast<std::size_t>(params.distractors_per_scene);
    for (std::size_t i = 0; i < needed; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(order.size() - 1)));
      std::swap(order[i], order[j]);
    }
    const std::vector<std::string> truth(order.begin(), order.begin() + static_cast<long>(n_true));
    const std::vector<std::string> distractors(order.begin() + static_cast<long>(n_true),
                                               order.begin() + static_cast<long>(needed));

    SimScene scene = params.trap_scenes ? make_trap_scene(params, truth, distractors, rng)
                                        : make_plain_scene(params, truth, distractors, rng);
    scene.context.image_ref = scene_image_ref(static_cast<std::size_t>(s));
    scene.context.prompt = std::string(kScenePrompt);
    scene.context.gt_objects = std::set<std::string>(truth.begin(), truth.end());
    scene.distractors = std::set<std::string>(distractors.begin(), distractors.end());
    world.scenes_.push_back(std::move(scene));
  }
  return world;
}

std::string scene_image_ref(std::size_t index) {
  return std::string(kImagePrefix) + std::to_string(index);
}

std::optional<std::size_t> SimWorld::scene_index(std::string_view image_ref) const {
  if (image_ref.substr(0, kImagePrefix.size()) != kImagePrefix) return std::nullopt;
  const std::string_view digits = image_ref.substr(kImagePrefix.size());
  if (digits.empty()) return std::nullopt;
  std::size_t value = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  if (value >= scenes_.size()) return std::nullopt;
  return value;
}

std::pair<double, double> SimWorld::verify(std::size_t scene, std::string_view object) const {
  const auto& dict = extraction::SynonymDictionary::coco_default();
  const auto canonical = dict.lookup(object);
  const bool present = canonical && scenes_.at(scene).context.gt_objects.count(*canonical) != 0;
  const double d = params_.disc_accuracy;
  return present ? std::pair{d, 1.0 - d} : std::pair{1.0 - d, d};
}

double SimWorld::sentence_clean_probability(std::size_t scene, std::string_view sentence) const {
  const auto ex = extraction::extract_objects(sentence, extraction::SynonymDictionary::coco_default());
  double p = 1.0;
  for (const auto& object : ex.objects) p *= verify(scene, object).first;
  return p;
}

std::optional<std::vector<int>> SimWorld::parse_response(std::size_t scene,
                                                         std::string_view text) const {
  const auto& templates = scenes_.at(scene).templates;
  std::vector<int> out;
  for (const auto& sentence : split_sentence_texts(text)) {
    auto it = std::find_if(templates.begin(), templates.end(),
                           [&](const Template& t) { return t.text == sentence; });
    if (it == templates.end()) return std::nullopt;
    out.push_back(static_cast<int>(it - templates.begin()));
  }
  return out;
}

std::vector<int> SimWorld::available(std::size_t scene, const std::vector<int>& used) const {
  const auto& templates = scenes_.at(scene).templates;
  auto unused = [&](int id) { return std::find(used.begin(), used.end(), id) == used.end(); };
  std::vector<int> out;
  if (!used.empty()) {
    const auto& last = templates.at(static_cast<std::size_t>(used.back()));
    if (!last.successors.empty()) {
      for (int id : last.successors) {
        if (unused(id)) out.push_back(id);
      }
      return out;
    }
  }
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (templates[i].entry && unused(static_cast<int>(i))) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool SimWorld::is_terminal(std::size_t scene, const std::vector<int>& used) const {
  return static_cast<int>(used.size()) >= params_.sentences_per_caption ||
         available(scene, used).empty();
}

double SimWorld::quality(std::size_t scene, std::string_view caption) const {
  const auto& templates = scenes_.at(scene).templates;
  const auto& dict = extraction::SynonymDictionary::coco_default();
  int redundant = 0;
  int violations = 0;
  std::set<std::string> seen_objects;
  std::set<std::string> seen_texts;
  std::vector<int> used;
  bool chain_known = true;
  for (const auto& sentence : split_sentence_texts(caption)) {
    const auto objects = extraction::extract_objects(sentence, dict).objects;
    const bool adds_object = std::any_of(objects.begin(), objects.end(), [&](const auto& o) {
      return seen_objects.count(o) == 0;
    });
    if (!adds_object || !seen_texts.insert(sentence).second) ++redundant;
    seen_objects.insert(objects.begin(), objects.end());

    auto it = std::find_if(templates.begin(), templates.end(),
                           [&](const Template& t) { return t.text == sentence; });
    if (it == templates.end()) {
      ++violations;
      chain_known = false;
      continue;
    }
    const int id = static_cast<int>(it - templates.begin());
    if (chain_known) {
      const auto allowed = available(scene, used);
      if (std::find(allowed.begin(), allowed.end(), id) == allowed.end()) ++violations;
    }
    used.push_back(id);
  }
  return std::clamp(10.0 - 2.0 * redundant - 3.0 * violations, 0.0, 10.0);
}

nlohmann::json SimWorld::to_json() const {
  nlohmann::json j;
  j["params"] = {
      {"seed", params_.seed},
      {"scene_count", params_.scene_count},
      {"hallucination_rate", params_.hallucination_rate},
      {"disc_accuracy", params_.disc_accuracy},
      {"min_objects", params_.min_objects},
      {"max_objects", params_.max_objects},
      {"distractors_per_scene", params_.distractors_per_scene},
      {"single_templates", params_.single_templates},
      {"pair_templates", params_.pair_templates},
      {"sentences_per_caption", params_.sentences_per_caption},
      {"prior_stddev", params_.prior_stddev},
      {"trap_scenes", params_.trap_scenes},
  };
  j["grammar"] = {{"single", single_patterns()}, {"pair", pair_patterns()}};
  nlohmann::json scenes = nlohmann::json::array();
  for (const auto& scene : scenes_) {
    nlohmann::json templates = nlohmann::json::array();
    for (const auto& t : scene.templates) {
      templates.push_back({{"text", t.text},
                           {"objects", t.objects},
                           {"kind", std::string(to_string(t.kind))},
                           {"entry", t.entry},
                           {"successors", t.successors},
                           {"prior_logit", t.prior_logit}});
    }
    scenes.push_back({{"image_ref", scene.context.image_ref},
                      {"prompt", scene.context.prompt},
                      {"gt_objects", scene.context.gt_objects},
                      {"distractors", scene.distractors},
                      {"templates", std::move(templates)}});
  }
  j["scenes"] = std::move(scenes);
  return j;
}

SimWorld SimWorld::from_json(const nlohmann::json& j) {
  SimWorld world;
  try {
    const auto& p = j.at("params");
    auto& w = world.params_;
    w.seed = p.at("seed").get<std::uint64_t>();
    w.scene_count = p.at("scene_count").get<int>();
    w.hallucination_rate = p.at("hallucination_rate").get<double>();
    w.disc_accuracy = p.at("disc_accuracy").get<double>();
    w.min_objects = p.at("min_objects").get<int>();
    w.max_objects = p.at("max_objects").get<int>();
    w.distractors_per_scene = p.at("distractors_per_scene").get<int>();
    w.single_templates = p.at("single_templates").get<int>();
    w.pair_templates = p.at("pair_templates").get<int>();
    w.sentences_per_caption = p.at("sentences_per_caption").get<int>();
    w.prior_stddev = p.at("prior_stddev").get<double>();
    w.trap_scenes = p.at("trap_scenes").get<bool>();
    for (const auto& s : j.at("scenes")) {
      SimScene scene;
      scene.context.image_ref = s.at("image_ref").get<std::string>();
      scene.context.prompt = s.at("prompt").get<std::string>();
      scene.context.gt_objects = s.at("gt_objects").get<std::set<std::string>>();
      scene.distractors = s.at("distractors").get<std::set<std::string>>();
      for (const auto& t : s.at("templates")) {
        Template tpl;
        tpl.text = t.at("text").get<std::string>();
        tpl.objects = t.at("objects").get<std::vector<std::string>>();
        tpl.kind = template_kind_from_string(t.at("kind").get<std::string>());
        tpl.entry = t.at("entry").get<bool>();
        tpl.successors = t.at("successors").get<std::vector<int>>();
        tpl.prior_logit = t.at("prior_logit").get<double>();
        scene.templates.push_back(std::move(tpl));
      }
      world.scenes_.push_back(std::move(scene));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed world document: ") + e.what());
  }
  return world;
}

}  // namespace oscar::sim
