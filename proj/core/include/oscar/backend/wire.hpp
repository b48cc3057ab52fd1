#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace oscar::backend {

/// Body of one completion request. Serialized with exactly the fields
/// {model, prompt, image, n, temperature, max_tokens, logprobs}.
struct GenerationRequest {
  std::string model;
  std::string prompt;
  /// URL, opaque reference or base64-encoded image bytes.
  std::string image;
  int n = 1;
  double temperature = 1.0;
  int max_tokens = 64;
  bool logprobs = true;

  /// Throws ArgumentError unless n >= 1, temperature > 0, max_tokens >= 1.
  void validate() const;

  bool operator==(const GenerationRequest&) const = default;
};

struct WireCandidate {
  std::string text;
  /// Summed log-probability; absent when the server cannot report it.
  std::optional<double> logprob;
  int tokens = 0;

  bool operator==(const WireCandidate&) const = default;
};

/// Response body {candidates: [{text, logprob, tokens}]}, with an optional
/// model id.
struct GenerationResponse {
  std::vector<WireCandidate> candidates;
  std::string model_id;

  bool operator==(const GenerationResponse&) const = default;
};

nlohmann::json to_json(const GenerationRequest& request);
nlohmann::json to_json(const GenerationResponse& response);

/// Strict decoders. Throw ProtocolError carrying the offending payload.
GenerationRequest parse_request(std::string_view body);
GenerationResponse parse_response(std::string_view body);

/// Compact, key-sorted encoding used on the wire and in fixtures.
std::string encode(const GenerationRequest& request);
std::string encode(const GenerationResponse& response);

/// Prompt texts shared by the remote client and the simulator server.
inline constexpr std::string_view kQualityTemplate =
    "<image> Please evaluate the following caption on three dimensions: logical consistency, "
    "linguistic fluency, and redundancy.\nCaption: {caption}\nPlease provide a single overall "
    "score from 0 to 10, where 0 is extremely poor and 10 is excellent.";

/// Separates the instruction from the partial response in generation prompts.
inline constexpr std::string_view kPrefixSeparator = "\n\n";

/// Temperature sent for greedy decoding (the protocol requires T > 0).
inline constexpr double kGreedyWireTemperature = 1e-3;

std::string quality_prompt(std::string_view caption,
                           std::string_view tmpl = kQualityTemplate);
std::string generation_prompt(std::string_view instruction, std::string_view prefix);

/// Inverse of generation_prompt: (instruction, prefix). A prompt without the
/// separator has an empty prefix.
std::pair<std::string, std::string> split_generation_prompt(std::string_view prompt);

/// Caption embedded in a quality prompt, if `prompt` is one.
std::optional<std::string> quality_prompt_caption(std::string_view prompt,
                                                  std::string_view tmpl = kQualityTemplate);

/// Strips a leading "<image>" marker and surrounding whitespace.
std::string strip_image_marker(std::string_view prompt);

}  // namespace oscar::backend
