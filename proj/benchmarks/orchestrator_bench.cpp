#include <benchmark/benchmark.h>

#include <random>

#include "scenario.hpp"
#include "stepwise/orchestrator.hpp"
#include "stepwise/trace.hpp"

using namespace stepwise;

static testing::Scenario scenario(int steps) {
  std::mt19937_64 rng(11);
  testing::Scenario sc;
  while (static_cast<int>(sc.steps.size()) < steps) {
    auto part = testing::random_scenario(rng, steps);
    sc.steps.insert(sc.steps.end(), part.steps.begin(), part.steps.end());
  }
  sc.steps.resize(static_cast<std::size_t>(steps));
  return sc;
}

// Whole-session overhead of the trigger loop over scripted (zero-latency) backends.
static void BM_RunTrigReason(benchmark::State& state) {
  const auto sc = scenario(static_cast<int>(state.range(0)));
  SessionConfig cfg;
  cfg.budget = 1 << 20;
  for (auto _ : state) {
    state.PauseTiming();
    auto srm = testing::make_srm_backend(sc);
    auto lrm = testing::make_lrm_backend(sc);
    state.ResumeTiming();
    benchmark::DoNotOptimize(run_trigreason(sc.question, cfg, *srm, *lrm));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunTrigReason)->Arg(50)->Arg(200);

static void BM_TraceRoundTrip(benchmark::State& state) {
  const auto sc = scenario(100);
  auto srm = testing::make_srm_backend(sc);
  auto lrm = testing::make_lrm_backend(sc);
  SessionConfig cfg;
  cfg.budget = 1 << 20;
  const auto session = run_trigreason(sc.question, cfg, *srm, *lrm);
  for (auto _ : state) benchmark::DoNotOptimize(parse_trace(write_trace(session)));
}
BENCHMARK(BM_TraceRoundTrip);

BENCHMARK_MAIN();
