#include <benchmark/benchmark.h>

#include "planedit/corpus.hpp"
#include "planedit/grammar.hpp"
#include "planedit/util.hpp"

using namespace planedit;

namespace {

std::vector<std::vector<TokenId>> make_inputs(bool valid, size_t count) {
  const Vocabulary vocab = default_vocabulary();
  Rng rng(42);
  std::vector<std::vector<TokenId>> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (valid) {
      ActionPlan plan;
      for (int dim = 1; dim <= kNumDimensions; ++dim) {
        const size_t n = 1 + uniform_index(rng, 2);
        for (size_t c = 0; c < n; ++c) {
          plan.segment(dim).push_back(static_cast<TokenId>(
              kNumDelimiterTokens + uniform_index(rng, vocab.content_size())));
        }
      }
      out.push_back(serialize_action_plan(plan));
    } else {
      std::vector<TokenId> soup(24);
      for (auto& t : soup) {
        t = static_cast<TokenId>(uniform_index(rng, vocab.size()));
      }
      out.push_back(std::move(soup));
    }
  }
  return out;
}

}  // namespace

static void BM_ParseValidPlan(benchmark::State& state) {
  const Vocabulary vocab = default_vocabulary();
  const auto inputs = make_inputs(true, 256);
  size_t i = 0;
  for (auto _ : state) {
    const auto res = parse_action_plan(inputs[i++ % inputs.size()], vocab);
    benchmark::DoNotOptimize(res.ok);
  }
}
BENCHMARK(BM_ParseValidPlan);

static void BM_ParseTokenSoup(benchmark::State& state) {
  const Vocabulary vocab = default_vocabulary();
  const auto inputs = make_inputs(false, 256);
  size_t i = 0;
  for (auto _ : state) {
    const auto res = parse_action_plan(inputs[i++ % inputs.size()], vocab);
    benchmark::DoNotOptimize(res.ok);
  }
}
BENCHMARK(BM_ParseTokenSoup);

static void BM_FormatReward(benchmark::State& state) {
  const Vocabulary vocab = default_vocabulary();
  const auto inputs = make_inputs(true, 256);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(format_reward(inputs[i++ % inputs.size()], vocab));
  }
}
BENCHMARK(BM_FormatReward);

BENCHMARK_MAIN();
