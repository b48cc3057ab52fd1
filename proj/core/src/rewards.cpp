#include "oscar/rewards/rewards.hpp"

#include <algorithm>

#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"
#include "oscar/extraction/extraction.hpp"

namespace oscar::rewards {

nlohmann::json to_json(const RewardRecord& r) {
  return {{"r_proc", r.r_proc},           {"gate", r.gate},
          {"score_quality", r.score_quality}, {"r_out", r.r_out},
          {"value", r.value},             {"zero_objects", r.zero_objects},
          {"scoring_error", r.scoring_error}, {"proc_fallback", r.proc_fallback}};
}

RewardRecord reward_record_from_json(const nlohmann::json& j) {
  RewardRecord r;
  r.r_proc = j.at("r_proc").get<double>();
  r.gate = j.at("gate").get<int>();
  r.score_quality = j.at("score_quality").get<double>();
  r.r_out = j.at("r_out").get<double>();
  r.value = j.at("value").get<double>();
  r.zero_objects = j.value("zero_objects", false);
  r.scoring_error = j.value("scoring_error", false);
  r.proc_fallback = j.value("proc_fallback", false);
  return r;
}

std::string verification_prompt(std::string_view sentence, std::string_view tmpl) {
  std::string out(tmpl);
  constexpr std::string_view kSlot = "{sentence}";
  const auto pos = out.find(kSlot);
  if (pos == std::string::npos) {
    throw ConfigError("verification template has no {sentence} slot");
  }
  out.replace(pos, kSlot.size(), sentence);
  return out;
}

ProcessReward process_reward(const SceneContext& ctx, std::string_view sentence,
                             backend::Backend& backend, const RewardOptions& options) {
  if (trim(sentence).empty()) throw ArgumentError("process_reward: empty sentence");
  backend::ChoiceQuery query{ctx.image_ref,
                             verification_prompt(sentence, options.verification_template),
                             {"Yes", "No"}};
  try {
    const auto probs = backend.choice_probability(query);
    return {std::clamp(probs.at(1), 0.0, 1.0), false};
  } catch (const CapabilityError&) {
    return {kUninformativeProcessReward, true};
  }
}

int gate(const std::set<std::string>& response_objects, const std::set<std::string>& gt_objects) {
  return std::includes(gt_objects.begin(), gt_objects.end(), response_objects.begin(),
                       response_objects.end())
             ? 1
             : 0;
}

OutcomeReward outcome_reward(const SceneContext& ctx, std::string_view rollout_text,
                             backend::Backend& backend, const RewardOptions& options) {
  OutcomeReward out;
  const auto objects = extraction::extract_objects(rollout_text, *options.dictionary).objects;
  out.zero_objects = objects.empty();
  out.gate = gate(objects, ctx.gt_objects);
  if (out.gate == 0) return out;
  try {
    out.score_quality = std::clamp(backend.quality_score(ctx, rollout_text), 0.0, 10.0);
    out.r_out = out.score_quality / 10.0;
  } catch (const ScoringError&) {
    out.scoring_error = true;
    out.score_quality = 0.0;
    out.r_out = 0.0;
  }
  return out;
}

RewardRecord combine(const ProcessReward& proc, const OutcomeReward& outcome) {
  RewardRecord r;
  r.r_proc = proc.value;
  r.proc_fallback = proc.fallback;
  r.gate = outcome.gate;
  r.score_quality = outcome.score_quality;
  r.r_out = outcome.gate == 1 ? outcome.r_out : 0.0;
  r.zero_objects = outcome.zero_objects;
  r.scoring_error = outcome.scoring_error;
  r.value = r.r_proc + r.r_out;
  return r;
}

RewardRecord node_value(const SceneContext& ctx, std::string_view sentence,
                        std::string_view rollout_text, backend::Backend& backend,
                        const RewardOptions& options) {
  return combine(process_reward(ctx, sentence, backend, options),
                 outcome_reward(ctx, rollout_text, backend, options));
}

void RewardAuditLog::record(std::string_view tree, std::uint32_t node, std::string_view sentence,
                            const RewardRecord& reward) {
  nlohmann::json line = {{"tree", tree},          {"node", node},
                         {"sentence", sentence},  {"r_proc", reward.r_proc},
                         {"gate", reward.gate},   {"score", reward.score_quality},
                         {"value", reward.value}};
  const std::string text = line.dump();
  std::lock_guard lock(mutex_);
  *out_ << text << '\n';
}

}  // namespace oscar::rewards
