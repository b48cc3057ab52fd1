#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "oscar/backend/backend.hpp"
#include "oscar/backend/wire.hpp"

namespace oscar::backend {

struct RemoteConfig {
  /// Full URL of the completion endpoint, e.g. http://127.0.0.1:8080/generate.
  std::string endpoint;
  /// Sent as a bearer token when non-empty.
  std::string token;
  std::string model = "default";
  int max_attempts = 3;
  std::chrono::milliseconds backoff{200};
  int max_in_flight = 8;
  int sentence_max_tokens = 64;
  int rollout_max_tokens = 512;
  int choice_max_tokens = 4;
  int quality_max_tokens = 16;
  std::chrono::seconds timeout{30};
  /// Estimate choice probabilities from sampled answers when the server has
  /// no log-probabilities. When false a CapabilityError is raised instead.
  bool vote_fallback = true;
  std::string quality_template{kQualityTemplate};

  /// Endpoint and token from OSCAR_ENDPOINT / OSCAR_TOKEN; other fields keep
  /// their defaults.
  static RemoteConfig from_env();

  /// Throws ConfigError on a missing endpoint or non-positive limits.
  void validate() const;
};

/// Transport result of one POST.
struct RawExchange {
  std::string request_body;
  std::string response_body;
  int attempts = 0;
};

/// Backend speaking the JSON completion protocol over HTTP. Retries
/// transport failures and 429/5xx replies with exponential backoff and caps
/// concurrent requests. Safe to share between threads.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ~RemoteBackend() override;

  std::vector<CandidateSentence> generate_candidates(const SceneContext& ctx,
                                                     std::string_view prefix, int k,
                                                     double temperature,
                                                     std::uint64_t seed) override;
  std::vector<double> choice_probability(const ChoiceQuery& query) override;
  std::string greedy_rollout(const SceneContext& ctx, std::string_view prefix,
                             int max_sentences) override;
  double quality_score(const SceneContext& ctx, std::string_view caption) override;
  std::string descriptor() const override;
  bool prefers_parallel_evaluation() const override { return true; }

  /// Sends one request and decodes the reply.
  GenerationResponse complete(const GenerationRequest& request);

  /// Sends an already-encoded body; exposes the raw bytes for protocol tests.
  RawExchange post(const std::string& body);

  const RemoteConfig& config() const { return config_; }

  /// Image field for a reference: URLs and non-file references pass through,
  /// readable local files are base64-encoded.
  static std::string encode_image(const std::string& image_ref);

 private:
  struct Impl;
  RemoteConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace oscar::backend
