#include <benchmark/benchmark.h>

#include "planedit/flow.hpp"
#include "planedit/util.hpp"

using namespace planedit;

namespace {

FlowBatch make_batch(int size, int d, int cond) {
  Rng rng(7);
  FlowBatch batch;
  for (int i = 0; i < size; ++i) {
    LatentVec x0(d), x1(d), h(cond);
    for (double& v : x0) v = normal01(rng);
    for (double& v : x1) v = normal01(rng);
    for (double& v : h) v = normal01(rng);
    batch.push_back(make_flow_tuple(x0, x1, uniform01(rng), h));
  }
  return batch;
}

}  // namespace

static void BM_FlowLossGrad(benchmark::State& state) {
  VelocityNet net = VelocityNet::init(8, 16, 64, 3);
  const FlowBatch batch = make_batch(static_cast<int>(state.range(0)), 8, 16);
  for (auto _ : state) {
    auto [loss, grad] = fm_loss_grad(net, batch);
    benchmark::DoNotOptimize(loss);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_FlowLossGrad)->Arg(16)->Arg(64);

static void BM_OdeSample(benchmark::State& state) {
  VelocityNet net = VelocityNet::init(8, 16, 64, 4);
  const LatentVec h(16, 0.1);
  Rng rng(5);
  for (auto _ : state) {
    const LatentVec out =
        sample_ode(net, h, static_cast<int>(state.range(0)), rng);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_OdeSample)->Arg(10)->Arg(50);

BENCHMARK_MAIN();
