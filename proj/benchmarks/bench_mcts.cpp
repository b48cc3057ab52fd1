#include <benchmark/benchmark.h>

#include <memory>
#include <string>

#include "oscar/core/rng.hpp"
#include "oscar/mcts/search.hpp"
#include "oscar/mcts/similarity.hpp"
#include "oscar/sim/sim_backend.hpp"

namespace {

using namespace oscar;

void BM_SelectChild(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  mcts::SearchTree tree(SceneContext{"bench://select", "Describe.", {}}, SearchConfig{});
  int total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    CandidateSentence c;
    c.text = "s" + std::to_string(i) + ".";
    const auto id = tree.add_child(tree.root(), c, 1.0 / static_cast<double>(k));
    tree.node(id).q = rng.uniform();
    tree.node(id).visits = tree.node(id).edge_visits = static_cast<int>(rng.uniform_int(0, 30));
    total += tree.node(id).visits;
  }
  tree.node(tree.root()).expanded = true;
  tree.node(tree.root()).visits = 1 + total;
  for (auto _ : state) benchmark::DoNotOptimize(mcts::select_child(tree, tree.root()));
}
BENCHMARK(BM_SelectChild)->Arg(4)->Arg(16)->Arg(64);

void BM_BowCosine(benchmark::State& state) {
  const std::string a = "A brown dog sleeps on the red sofa next to a small cat.";
  const std::string b = "A small cat sits on the sofa beside a sleeping brown dog.";
  for (auto _ : state) benchmark::DoNotOptimize(mcts::bow_cosine(a, b));
}
BENCHMARK(BM_BowCosine);

void BM_RunSearch(benchmark::State& state) {
  const auto world = std::make_shared<const sim::SimWorld>(sim::SimWorld::generate({}));
  const auto policy = std::make_shared<const sim::ToyPolicy>(sim::ToyPolicy::from_world(*world));
  sim::SimBackend backend(world, policy);
  SearchConfig cfg;
  cfg.budget = static_cast<int>(state.range(0));
  std::size_t scene = 0;
  for (auto _ : state) {
    cfg.seed = scene;
    auto tree = mcts::run_search(world->scene(scene % world->size()).context, cfg, backend);
    benchmark::DoNotOptimize(tree.size());
    ++scene;
  }
}
BENCHMARK(BM_RunSearch)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace
