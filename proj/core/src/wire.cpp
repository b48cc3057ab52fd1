#include "oscar/backend/wire.hpp"

#include <cmath>
#include <set>

#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar::backend {

using nlohmann::json;

void GenerationRequest::validate() const {
  if (n < 1) throw ArgumentError("request n must be at least 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ArgumentError("request temperature must be positive");
  }
  if (max_tokens < 1) throw ArgumentError("request max_tokens must be at least 1");
}

json to_json(const GenerationRequest& r) {
  return json{{"model", r.model},   {"prompt", r.prompt},           {"image", r.image},
              {"n", r.n},           {"temperature", r.temperature}, {"max_tokens", r.max_tokens},
              {"logprobs", r.logprobs}};
}

json to_json(const GenerationResponse& r) {
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back(json{{"text", c.text},
                              {"logprob", c.logprob ? json(*c.logprob) : json(nullptr)},
                              {"tokens", c.tokens}});
  }
  json out{{"candidates", std::move(candidates)}};
  if (!r.model_id.empty()) out["model"] = r.model_id;
  return out;
}

namespace {

json parse_object(std::string_view body) {
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProtocolError("body is not a JSON object", std::string(body));
  }
  return j;
}

}  // namespace

GenerationRequest parse_request(std::string_view body) {
  static const std::set<std::string> kFields = {"model",       "prompt",     "image",   "n",
                                                "temperature", "max_tokens", "logprobs"};
  const json j = parse_object(body);
  for (const auto& [key, value] : j.items()) {
    if (!kFields.count(key)) throw ProtocolError("unexpected request field: " + key, std::string(body));
  }
  try {
    GenerationRequest r;
    r.model = j.at("model").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.image = j.at("image").get<std::string>();
    r.n = j.at("n").get<int>();
    r.temperature = j.at("temperature").get<double>();
    r.max_tokens = j.at("max_tokens").get<int>();
    r.logprobs = j.at("logprobs").get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what(), std::string(body));
  }
}

GenerationResponse parse_response(std::string_view body) {
  const json j = parse_object(body);
  try {
    GenerationResponse r;
    for (const auto& c : j.at("candidates")) {
      WireCandidate w;
      w.text = c.at("text").get<std::string>();
      if (c.contains("logprob") && !c.at("logprob").is_null()) {
        w.logprob = c.at("logprob").get<double>();
        if (!(*w.logprob <= 0.0)) {
          throw ProtocolError("candidate logprob must be <= 0", std::string(body));
        }
      }
      w.tokens = c.at("tokens").get<int>();
      if (w.tokens < 0) throw ProtocolError("negative token count", std::string(body));
      r.candidates.push_back(std::move(w));
    }
    if (j.contains("model")) r.model_id = j.at("model").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what(), std::string(body));
  }
}

std::string encode(const GenerationRequest& request) { return to_json(request).dump(); }
std::string encode(const GenerationResponse& response) { return to_json(response).dump(); }

namespace {

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

}  // namespace

std::string quality_prompt(std::string_view caption, std::string_view tmpl) {
  return replace_all(std::string(tmpl), "{caption}", caption);
}

std::string generation_prompt(std::string_view instruction, std::string_view prefix) {
  std::string out(instruction);
  out += kPrefixSeparator;
  out += prefix;
  return out;
}

std::pair<std::string, std::string> split_generation_prompt(std::string_view prompt) {
  const auto pos = prompt.find(kPrefixSeparator);
  if (pos == std::string_view::npos) return {std::string(prompt), std::string()};
  return {std::string(prompt.substr(0, pos)),
          std::string(prompt.substr(pos + kPrefixSeparator.size()))};
}

std::optional<std::string> quality_prompt_caption(std::string_view prompt, std::string_view tmpl) {
  const auto slot = tmpl.find("{caption}");
  if (slot == std::string_view::npos) return std::nullopt;
  const auto head = tmpl.substr(0, slot);
  const auto tail = tmpl.substr(slot + 9);
  if (prompt.size() < head.size() + tail.size()) return std::nullopt;
  if (prompt.substr(0, head.size()) != head) return std::nullopt;
  if (prompt.substr(prompt.size() - tail.size()) != tail) return std::nullopt;
  return std::string(prompt.substr(head.size(), prompt.size() - head.size() - tail.size()));
}

std::string strip_image_marker(std::string_view prompt) {
  auto text = trim(prompt);
  constexpr std::string_view kMarker = "<image>";
  if (text.rfind(kMarker, 0) == 0) text = trim(std::string_view(text).substr(kMarker.size()));
  return text;
}

}  // namespace oscar::backend
