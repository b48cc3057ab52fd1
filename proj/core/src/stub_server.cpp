#include "oscar/backend/stub_server.hpp"

#include <httplib.h>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "oscar/backend/remote.hpp"
#include "oscar/core/errors.hpp"
#include "oscar/core/rng.hpp"
#include "oscar/core/text.hpp"
#include "oscar/sim/sim_backend.hpp"

namespace oscar::stub {

using nlohmann::json;

namespace {

Reply error_reply(int status, const std::string& message) {
  return Reply{status, json{{"error", message}}.dump()};
}

}  // namespace

struct StubServer::Impl {
  Handler handler;
  FaultPlan faults;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mutex;
  std::vector<std::string> bodies;
};

StubServer::StubServer(Handler handler, FaultPlan faults) : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  impl_->faults = faults;
  impl_->server.Post(R"(/.*)", [impl = impl_.get()](const httplib::Request& req,
                                                   httplib::Response& res) {
    int index = 0;
    {
      std::lock_guard lock(impl->mutex);
      index = static_cast<int>(impl->bodies.size());
      impl->bodies.push_back(req.body);
    }
    Reply reply;
    if (index < impl->faults.fail_first) {
      reply = error_reply(503, "injected failure");
    } else if (index < impl->faults.fail_first + impl->faults.malformed_first) {
      reply = Reply{200, "this is not json"};
    } else {
      try {
        reply = impl->handler(req.body);
      } catch (const ProtocolError& e) {
        reply = error_reply(400, e.what());
      } catch (const std::exception& e) {
        reply = error_reply(500, e.what());
      }
    }
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
}

StubServer::~StubServer() { stop(); }

int StubServer::start(int port, const std::string& host) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ <= 0) throw Error("stub server could not bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void StubServer::listen_blocking(int port, const std::string& host) {
  if (!impl_->server.bind_to_port(host, port)) throw Error("stub server could not bind port");
  port_ = port;
  impl_->server.listen_after_bind();
}

void StubServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/generate";
}

std::vector<std::string> StubServer::received() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->bodies;
}

int StubServer::request_count() const {
  std::lock_guard lock(impl_->mutex);
  return static_cast<int>(impl_->bodies.size());
}

namespace {

bool is_choice_prompt(const std::string& prompt) {
  static const std::regex kProbe(R"(^Is there (?:a/an|an|a) .+ in the image\?$)",
                                 std::regex::icase);
  return prompt.find("Answer Choices:") != std::string::npos ||
         std::regex_match(backend::strip_image_marker(prompt), kProbe);
}

std::string format_score(double score) {
  std::ostringstream os;
  os << score;
  return os.str();
}

}  // namespace

StubServer::Handler simulator_handler(std::shared_ptr<const sim::SimWorld> world,
                                      std::shared_ptr<const sim::ToyPolicy> policy) {
  auto backend = std::make_shared<sim::SimBackend>(world, policy);
  return [world, policy, backend](const std::string& body) -> Reply {
    const auto req = backend::parse_request(body);
    req.validate();
    const auto scene = world->scene_index(req.image);
    if (!scene) return error_reply(400, "unknown image: " + req.image);
    const auto& ctx = world->scene(*scene).context;
    backend::GenerationResponse resp;
    resp.model_id = "oscar-sim";

    if (auto caption = backend::quality_prompt_caption(req.prompt)) {
      const double score = backend->quality_score(ctx, *caption);
      resp.candidates.push_back({format_score(score), std::nullopt, 1});
    } else if (is_choice_prompt(req.prompt)) {
      backend::ChoiceQuery q{req.image, backend::strip_image_marker(req.prompt), {"Yes", "No"}};
      if (q.prompt_text.rfind("Is there", 0) != 0) q.prompt_text = req.prompt;
      const auto probs = backend->choice_probability(q);
      for (std::size_t i = 0; i < probs.size() && static_cast<int>(i) < req.n; ++i) {
        if (probs[i] <= 0.0) continue;
        resp.candidates.push_back(
            {q.choices[i], req.logprobs ? std::optional<double>(std::log(probs[i])) : std::nullopt, 1});
      }
    } else {
      const auto [instruction, prefix] = backend::split_generation_prompt(req.prompt);
      const int limit = world->params().sentences_per_caption;
      const auto used = world->parse_response(*scene, prefix);
      if (!used) return error_reply(400, "prefix is not a response of this scene");
      const double base = sim::response_logprob(*policy, *world, *scene, *used);
      auto continuation = [&](const std::string& start) {
        const auto full = backend->greedy_rollout(ctx, start, limit);
        std::string tail = trim(std::string_view(full).substr(prefix.size()));
        const auto t = world->parse_response(*scene, full).value_or(std::vector<int>{});
        backend::WireCandidate c;
        c.text = tail;
        if (req.logprobs) c.logprob = std::min(0.0, sim::response_logprob(*policy, *world, *scene, t) - base);
        c.tokens = whitespace_token_count(tail);
        return c;
      };
      if (req.temperature <= sim::kGreedyTemperature) {
        resp.candidates.push_back(continuation(prefix));
      } else {
        const auto seed = derive_seed(world->params().seed, {fnv1a64(req.image), fnv1a64(req.prompt)});
        for (const auto& cand : backend->generate_candidates(ctx, prefix, req.n, req.temperature, seed)) {
          resp.candidates.push_back(continuation(append_sentence(prefix, cand.text)));
        }
      }
    }
    return Reply{200, backend::encode(resp)};
  };
}

std::vector<Exchange> load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open session: " + path.string());
  std::vector<Exchange> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back(Exchange{j.at("request").get<std::string>(), j.at("response").get<std::string>(),
                             j.value("status", 200)});
    } catch (const json::exception& e) {
      throw DatasetError(e.what(), n);
    }
  }
  return out;
}

void save_session(const std::vector<Exchange>& exchanges, const std::filesystem::path& path) {
  std::string text;
  for (const auto& e : exchanges) {
    text += json{{"request", e.request}, {"response", e.response}, {"status", e.status}}.dump();
    text += '\n';
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write session: " + path.string());
}

StubServer::Handler replay_handler(std::vector<Exchange> session) {
  struct State {
    std::mutex mutex;
    std::map<std::string, std::vector<Exchange>> by_request;
    std::map<std::string, std::size_t> served;
  };
  auto state = std::make_shared<State>();
  for (auto& e : session) {
    auto key = backend::encode(backend::parse_request(e.request));
    state->by_request[key].push_back(std::move(e));
  }
  return [state](const std::string& body) -> Reply {
    const auto key = backend::encode(backend::parse_request(body));
    std::lock_guard lock(state->mutex);
    auto it = state->by_request.find(key);
    if (it == state->by_request.end()) return error_reply(404, "request not in session");
    auto& n = state->served[key];
    const auto& e = it->second[std::min(n, it->second.size() - 1)];
    ++n;
    return Reply{e.status, e.response};
  };
}

struct Recorder::State {
  explicit State(std::string upstream) {
    backend::RemoteConfig c;
    c.endpoint = std::move(upstream);
    c.max_attempts = 1;
    client = std::make_unique<backend::RemoteBackend>(c);
  }
  std::unique_ptr<backend::RemoteBackend> client;
  mutable std::mutex mutex;
  std::vector<Exchange> session;
};

Recorder::Recorder(std::string upstream) : state_(std::make_shared<State>(std::move(upstream))) {}

StubServer::Handler Recorder::handler() {
  auto state = state_;
  return [state](const std::string& body) -> Reply {
    const auto ex = state->client->post(body);
    std::lock_guard lock(state->mutex);
    state->session.push_back(Exchange{body, ex.response_body, 200});
    return Reply{200, ex.response_body};
  };
}

std::vector<Exchange> Recorder::session() const {
  std::lock_guard lock(state_->mutex);
  return state_->session;
}

}  // namespace oscar::stub
