#include <benchmark/benchmark.h>

#include <string>

#include "stepwise/lexicon.hpp"

using namespace stepwise;

static std::string step_text(bool hesitant, int sentences) {
  std::string text;
  for (int i = 0; i < sentences; ++i) text += "Multiplying both sides by 3 gives 3x + 6 = 21, so 3x = 15. ";
  if (hesitant) text += "Wait, let me double-check the sign.";
  return text;
}

static void BM_DetectHesitation(benchmark::State& state) {
  const HesitationLexicon lexicon;
  const auto text = step_text(state.range(1) != 0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(detect_hesitation(text, lexicon));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_DetectHesitation)->ArgsProduct({{1, 8, 64}, {0, 1}});

BENCHMARK_MAIN();
