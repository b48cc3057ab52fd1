#pragma once

#include <cstdint>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "oscar/backend/backend.hpp"
#include "oscar/core/types.hpp"
#include "oscar/extraction/dictionary.hpp"

namespace oscar::rewards {

/// Node-level verification prompt; {sentence} is replaced by the candidate.
inline constexpr std::string_view kVerificationTemplate =
    "<image> Please determine if the following sentence mentions objects that are not present "
    "in the image: {sentence}\nAnswer Choices: (A) Yes (B) No";

/// Process reward used when the backend cannot report choice probabilities.
inline constexpr double kUninformativeProcessReward = 0.5;

struct RewardOptions {
  std::string verification_template{kVerificationTemplate};
  const extraction::SynonymDictionary* dictionary = &extraction::SynonymDictionary::coco_default();
};

struct RewardRecord {
  double r_proc = 0.0;
  int gate = 0;
  double score_quality = 0.0;
  double r_out = 0.0;
  double value = 0.0;
  /// The rollout mentioned no dictionary object (passes the gate vacuously).
  bool zero_objects = false;
  /// The quality reply could not be parsed; r_out was forced to 0.
  bool scoring_error = false;
  /// The backend had no choice probabilities; r_proc is the 0.5 fallback.
  bool proc_fallback = false;

  bool operator==(const RewardRecord&) const = default;
};

nlohmann::json to_json(const RewardRecord& record);
RewardRecord reward_record_from_json(const nlohmann::json& j);

std::string verification_prompt(std::string_view sentence,
                                std::string_view tmpl = kVerificationTemplate);

struct ProcessReward {
  double value = 0.0;
  bool fallback = false;
};

/// P("No") for the verification prompt, renormalized over {Yes, No}.
/// CapabilityError yields the 0.5 fallback; other backend errors propagate.
ProcessReward process_reward(const SceneContext& ctx, std::string_view sentence,
                             backend::Backend& backend, const RewardOptions& options = {});

/// 1 iff every response object is a ground-truth object.
int gate(const std::set<std::string>& response_objects, const std::set<std::string>& gt_objects);

struct OutcomeReward {
  int gate = 0;
  double score_quality = 0.0;
  double r_out = 0.0;
  bool zero_objects = false;
  bool scoring_error = false;
};

/// Gated quality reward of a complete response. The quality score is only
/// requested when the gate passes.
OutcomeReward outcome_reward(const SceneContext& ctx, std::string_view rollout_text,
                             backend::Backend& backend, const RewardOptions& options = {});

/// value = r_proc + r_out.
RewardRecord combine(const ProcessReward& proc, const OutcomeReward& outcome);

RewardRecord node_value(const SceneContext& ctx, std::string_view sentence,
                        std::string_view rollout_text, backend::Backend& backend,
                        const RewardOptions& options = {});

/// JSON Lines sink with one record per evaluated node. Thread-safe.
class RewardAuditLog {
 public:
  explicit RewardAuditLog(std::ostream& out) : out_(&out) {}

  void record(std::string_view tree, std::uint32_t node, std::string_view sentence,
              const RewardRecord& reward);

 private:
  std::mutex mutex_;
  std::ostream* out_;
};

}  // namespace oscar::rewards
