#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "oscar/backend/wire.hpp"
#include "oscar/sim/policy.hpp"
#include "oscar/sim/world.hpp"

namespace oscar::stub {

struct Reply {
  int status = 200;
  std::string body;
};

/// Fault injection shared by every stub flavour.
struct FaultPlan {
  /// The first N requests get HTTP 503.
  int fail_first = 0;
  /// The next N requests after those get a 200 with a non-JSON body.
  int malformed_first = 0;
};

/// Minimal HTTP server on 127.0.0.1 answering POSTs to any path with a
/// handler. Listens on a background thread until stopped or destroyed.
class StubServer {
 public:
  using Handler = std::function<Reply(const std::string& body)>;

  StubServer(Handler handler, FaultPlan faults = {});
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds (0 picks a free port) and starts serving. Returns the port.
  int start(int port = 0, const std::string& host = "127.0.0.1");
  /// Blocks serving on the calling thread.
  void listen_blocking(int port, const std::string& host = "127.0.0.1");
  void stop();

  int port() const { return port_; }
  std::string endpoint() const;

  /// Request bodies in arrival order, including failed ones.
  std::vector<std::string> received() const;
  int request_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// Handler answering requests from a simulated world and policy, so the
/// remote client can be exercised against the simulator over HTTP.
StubServer::Handler simulator_handler(std::shared_ptr<const sim::SimWorld> world,
                                      std::shared_ptr<const sim::ToyPolicy> policy);

/// One recorded request/response exchange.
struct Exchange {
  std::string request;
  std::string response;
  int status = 200;
};

std::vector<Exchange> load_session(const std::filesystem::path& path);
void save_session(const std::vector<Exchange>& exchanges, const std::filesystem::path& path);

/// Handler replaying a recorded session. Requests are matched by their
/// canonical encoding; repeats of the same request are served in recorded
/// order and the last one is reused after that. Unknown requests get 404.
StubServer::Handler replay_handler(std::vector<Exchange> session);

/// Handler forwarding to `upstream` and appending every exchange to the
/// shared session list.
class Recorder {
 public:
  explicit Recorder(std::string upstream);
  StubServer::Handler handler();
  std::vector<Exchange> session() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

}  // namespace oscar::stub
