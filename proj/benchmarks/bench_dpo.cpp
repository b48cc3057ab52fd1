#include <benchmark/benchmark.h>

#include <memory>

#include "oscar/core/rng.hpp"
#include "oscar/dpo/dpo.hpp"
#include "oscar/mcts/search.hpp"
#include "oscar/preference/preference.hpp"
#include "oscar/sim/sim_backend.hpp"

namespace {

using namespace oscar;

void BM_DpoGradient(benchmark::State& state) {
  const auto world = std::make_shared<const sim::SimWorld>(sim::SimWorld::generate({}));
  const auto ref = sim::ToyPolicy::from_world(*world);
  sim::SimBackend backend(world, std::make_shared<const sim::ToyPolicy>(ref));
  std::vector<dpo::ScoredPair> batch;
  for (std::size_t s = 0; s < world->size(); ++s) {
    SearchConfig cfg;
    cfg.seed = s;
    for (const auto& p : preference::extract_pairs(mcts::run_search(world->scene(s).context, cfg, backend))) {
      if (auto sp = dpo::score_pair(*world, p)) batch.push_back(*sp);
    }
  }
  auto policy = ref;
  Rng rng(3);
  for (auto& row : policy.theta) {
    for (auto& x : row) x += rng.normal(0.0, 0.5);
  }
  for (auto _ : state) {
    auto g = dpo::dpo_gradient(policy, ref, *world, batch, 0.1);
    benchmark::DoNotOptimize(g.data());
  }
  state.counters["pairs"] = static_cast<double>(batch.size());
}
BENCHMARK(BM_DpoGradient)->Unit(benchmark::kMicrosecond);

}  // namespace
