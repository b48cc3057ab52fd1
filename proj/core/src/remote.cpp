#include "oscar/backend/remote.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <regex>
#include <semaphore>
#include <thread>

#include "oscar/core/digest.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/text.hpp"

namespace oscar::backend {

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig c;
  if (const char* e = std::getenv("OSCAR_ENDPOINT")) c.endpoint = e;
  if (const char* t = std::getenv("OSCAR_TOKEN")) c.token = t;
  return c;
}

void RemoteConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("remote endpoint is not set (OSCAR_ENDPOINT)");
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (backoff.count() < 0) throw ConfigError("backoff must be nonnegative");
  if (sentence_max_tokens < 1 || rollout_max_tokens < 1 || choice_max_tokens < 1 ||
      quality_max_tokens < 1) {
    throw ConfigError("token limits must be positive");
  }
}

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url parse_url(const std::string& endpoint) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(endpoint, m, kUrl)) {
    throw ConfigError("endpoint is not an http(s) URL: " + endpoint);
  }
  Url u{m[1].str(), m[2].matched ? m[2].str() : std::string("/generate")};
  return u;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

double logsumexp(const std::vector<double>& xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

struct RemoteBackend::Impl {
  explicit Impl(const RemoteConfig& c) : url(parse_url(c.endpoint)), slots(c.max_in_flight) {}
  Url url;
  std::counting_semaphore<4096> slots;
};

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  config_.validate();
  impl_ = std::make_unique<Impl>(config_);
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::encode_image(const std::string& image_ref) {
  if (image_ref.find("://") != std::string::npos) return image_ref;
  std::error_code ec;
  if (!image_ref.empty() && std::filesystem::is_regular_file(image_ref, ec)) {
    return base64_encode(read_file(image_ref));
  }
  return image_ref;
}

RawExchange RemoteBackend::post(const std::string& body) {
  RawExchange ex;
  ex.request_body = body;
  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    ex.attempts = attempt;
    httplib::Client client(impl_->url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);
    auto res = client.Post(impl_->url.path, headers, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      ex.response_body = res->body;
      return ex;
    }
    if (res && !retryable_status(res->status)) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + config_.endpoint,
                          res->body);
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
    }
  }
  throw TransportError("request to " + config_.endpoint + " failed: " + last_error,
                       config_.max_attempts);
}

GenerationResponse RemoteBackend::complete(const GenerationRequest& request) {
  request.validate();
  const auto ex = post(encode(request));
  auto response = parse_response(ex.response_body);
  if (static_cast<int>(response.candidates.size()) > request.n) {
    throw ProtocolError("server returned more candidates than requested", ex.response_body);
  }
  return response;
}

std::vector<CandidateSentence> RemoteBackend::generate_candidates(const SceneContext& ctx,
                                                                  std::string_view prefix, int k,
                                                                  double temperature,
                                                                  std::uint64_t /*seed*/) {
  if (k < 1) throw ArgumentError("generate_candidates: k must be at least 1");
  GenerationRequest req;
  req.model = config_.model;
  req.prompt = generation_prompt(ctx.prompt, prefix);
  req.image = encode_image(ctx.image_ref);
  req.n = k;
  req.temperature = std::max(temperature, kGreedyWireTemperature);
  req.max_tokens = config_.sentence_max_tokens;
  req.logprobs = true;
  const auto response = complete(req);

  std::vector<CandidateSentence> out;
  for (const auto& c : response.candidates) {
    const auto sentences = split_sentence_texts(c.text);
    if (sentences.empty()) continue;
    CandidateSentence cand;
    cand.text = sentences.front();
    const int total_words = std::max(1, whitespace_token_count(c.text));
    const double fraction =
        sentences.size() == 1 ? 1.0
                              : static_cast<double>(whitespace_token_count(cand.text)) / total_words;
    const int tokens = c.tokens > 0 ? c.tokens : total_words;
    cand.token_count = std::max(1, static_cast<int>(std::lround(tokens * fraction)));
    if (c.logprob) {
      cand.logprob = *c.logprob * fraction;
    } else {
      cand.logprob = 0.0;
      cand.logprob_available = false;
    }
    cand.end_of_response = sentences.size() == 1 && c.tokens < req.max_tokens;
    out.push_back(std::move(cand));
  }
  return out;
}

std::vector<double> RemoteBackend::choice_probability(const ChoiceQuery& query) {
  query.validate();
  GenerationRequest req;
  req.model = config_.model;
  req.prompt = query.prompt_text;
  req.image = encode_image(query.image_ref);
  req.n = kVoteSamples;
  req.temperature = 1.0;
  req.max_tokens = config_.choice_max_tokens;
  req.logprobs = true;
  const auto response = complete(req);

  const bool have_logprobs =
      !response.candidates.empty() &&
      std::all_of(response.candidates.begin(), response.candidates.end(),
                  [](const WireCandidate& c) { return c.logprob.has_value(); });
  if (have_logprobs) {
    // Distinct answer strings only: repeated samples of the same answer carry
    // the same sequence probability.
    std::vector<std::map<std::string, double>> per_choice(query.choices.size());
    for (const auto& c : response.candidates) {
      const int idx = match_choice(c.text, query.choices);
      if (idx >= 0) per_choice[static_cast<std::size_t>(idx)].emplace(trim(c.text), *c.logprob);
    }
    std::vector<double> logprobs;
    bool any = false;
    for (const auto& m : per_choice) {
      std::vector<double> xs;
      for (const auto& [text, lp] : m) xs.push_back(lp);
      logprobs.push_back(logsumexp(xs));
      any = any || !xs.empty();
    }
    if (any) return renormalize_logprobs(logprobs);
  } else if (!config_.vote_fallback) {
    throw CapabilityError("endpoint returned no log-probabilities; enable the vote fallback (" +
                          std::to_string(kVoteSamples) + " samples)");
  }
  std::vector<std::string> samples;
  for (const auto& c : response.candidates) samples.push_back(c.text);
  return vote_probability(samples, query.choices);
}

std::string RemoteBackend::greedy_rollout(const SceneContext& ctx, std::string_view prefix,
                                          int max_sentences) {
  int have = static_cast<int>(split_sentence_texts(prefix).size());
  std::string out(prefix);
  if (have >= max_sentences) return out;
  GenerationRequest req;
  req.model = config_.model;
  req.prompt = generation_prompt(ctx.prompt, prefix);
  req.image = encode_image(ctx.image_ref);
  req.n = 1;
  req.temperature = kGreedyWireTemperature;
  req.max_tokens = config_.rollout_max_tokens;
  req.logprobs = false;
  const auto response = complete(req);
  if (response.candidates.empty()) return out;
  for (const auto& s : split_sentence_texts(response.candidates.front().text)) {
    if (have >= max_sentences) break;
    out = append_sentence(out, s);
    ++have;
  }
  return out;
}

double RemoteBackend::quality_score(const SceneContext& ctx, std::string_view caption) {
  if (trim(caption).empty()) throw ArgumentError("quality_score: empty caption");
  GenerationRequest req;
  req.model = config_.model;
  req.prompt = quality_prompt(caption, config_.quality_template);
  req.image = encode_image(ctx.image_ref);
  req.n = 1;
  req.temperature = kGreedyWireTemperature;
  req.max_tokens = config_.quality_max_tokens;
  req.logprobs = false;
  const auto response = complete(req);
  if (response.candidates.empty()) throw ScoringError("quality reply has no candidates");
  return parse_quality_score(response.candidates.front().text);
}

std::string RemoteBackend::descriptor() const {
  return "remote(endpoint=" + config_.endpoint + ", model=" + config_.model + ")";
}

}  // namespace oscar::backend
