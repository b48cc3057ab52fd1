// Stand-alone completion server for protocol tests: simulator-backed,
// recording proxy or replay of a recorded session.
#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <memory>
#include <mutex>

#include <nlohmann/json.hpp>

#include "oscar/backend/stub_server.hpp"
#include "oscar/core/digest.hpp"

namespace {

int serve(oscar::stub::StubServer& server, int port) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  server.start(port);
  std::cout << server.endpoint() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Completion protocol stub server", "oscar-stub"};
  app.require_subcommand(1);
  int port = 0;
  oscar::stub::FaultPlan faults;
  std::string world_path, policy_path, upstream, session_path;
  std::uint64_t seed = 7;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--port", port, "Port (0 picks a free one)");
    sub->add_option("--fail-first", faults.fail_first, "Answer the first N requests with 503");
    sub->add_option("--malformed-first", faults.malformed_first,
                    "Then answer N requests with a non-JSON body");
  };
  auto* sim = app.add_subcommand("sim", "Answer from a simulated world");
  common(sim);
  sim->add_option("--world", world_path)->check(CLI::ExistingFile);
  sim->add_option("--policy", policy_path)->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "World seed when --world is not given");
  auto* record = app.add_subcommand("record", "Forward to an upstream and record exchanges");
  common(record);
  record->add_option("--upstream", upstream)->required();
  record->add_option("--session", session_path)->required();
  auto* replay = app.add_subcommand("replay", "Replay a recorded session");
  common(replay);
  replay->add_option("--session", session_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      using nlohmann::json;
      oscar::sim::WorldParams params;
      params.seed = seed;
      auto world = std::make_shared<const oscar::sim::SimWorld>(
          world_path.empty() ? oscar::sim::SimWorld::generate(params)
                             : oscar::sim::SimWorld::from_json(json::parse(oscar::read_file(world_path))));
      auto policy = std::make_shared<const oscar::sim::ToyPolicy>(
          policy_path.empty() ? oscar::sim::ToyPolicy::from_world(*world)
                              : oscar::sim::ToyPolicy::from_json(json::parse(oscar::read_file(policy_path))));
      oscar::stub::StubServer server(oscar::stub::simulator_handler(world, policy), faults);
      return serve(server, port);
    }
    if (*record) {
      auto recorder = std::make_shared<oscar::stub::Recorder>(upstream);
      auto inner = recorder->handler();
      auto mutex = std::make_shared<std::mutex>();
      oscar::stub::StubServer server(
          [=](const std::string& body) {
            auto reply = inner(body);
            std::lock_guard lock(*mutex);
            oscar::stub::save_session(recorder->session(), session_path);
            return reply;
          },
          faults);
      return serve(server, port);
    }
    oscar::stub::StubServer server(
        oscar::stub::replay_handler(oscar::stub::load_session(session_path)), faults);
    return serve(server, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
