#include <benchmark/benchmark.h>

#include "planedit/corpus.hpp"
#include "planedit/policy.hpp"

using namespace planedit;

static void BM_SampleGroup(benchmark::State& state) {
  const Vocabulary vocab = default_vocabulary();
  PolicyParams p = PolicyParams::zeros(4, vocab.size(), 40, vocab.fingerprint());
  p.add_noise(1, 0.5);
  SampleOptions opts;
  opts.max_len = 40;
  opts.end_token = Vocabulary::end_token();
  uint64_t seed = 0;
  for (auto _ : state) {
    const SampledGroup g =
        sample_group(p, 0, static_cast<int>(state.range(0)), ++seed, opts);
    benchmark::DoNotOptimize(g.rollouts.size());
  }
}
BENCHMARK(BM_SampleGroup)->Arg(8)->Arg(32);

static void BM_SequenceLogprob(benchmark::State& state) {
  const Vocabulary vocab = default_vocabulary();
  PolicyParams p = PolicyParams::zeros(4, vocab.size(), 40, vocab.fingerprint());
  p.add_noise(2, 0.5);
  SampleOptions opts;
  opts.max_len = 40;
  const Rollout r = sample_group(p, 0, 2, 9, opts).rollouts[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(sequence_logprob(p, 0, r.tokens));
  }
}
BENCHMARK(BM_SequenceLogprob);

static void BM_LogprobGradient(benchmark::State& state) {
  const Vocabulary vocab = default_vocabulary();
  PolicyParams p = PolicyParams::zeros(4, vocab.size(), 40, vocab.fingerprint());
  p.add_noise(3, 0.5);
  SampleOptions opts;
  opts.max_len = 40;
  const Rollout r = sample_group(p, 0, 2, 11, opts).rollouts[0];
  std::vector<double> grad(p.table_size(), 0.0);
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    accumulate_logprob_gradient(p, 0, r.tokens, 1.0, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_LogprobGradient);

BENCHMARK_MAIN();
