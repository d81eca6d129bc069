#include <benchmark/benchmark.h>

#include <random>

#include "pcpa/autodiff.hpp"
#include "pcpa/optim.hpp"
#include "pcpa/synthetic.hpp"

namespace {

pcpa::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  pcpa::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
  }
  return t;
}

void BM_MatMulForwardBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  pcpa::ParamStore ps;
  ps.create("w", random_tensor({n, n}, rng));
  ps.create("x", random_tensor({n}, rng));
  for (auto _ : state) {
    pcpa::Tape t;
    pcpa::Var loss = t.sum(t.matmul(t.param(ps.get("w")), t.param(ps.get("x"))));
    t.backward(loss);
    benchmark::DoNotOptimize(t.value(loss)[0]);
    ps.zero_grads();
  }
}
BENCHMARK(BM_MatMulForwardBackward)->Arg(64)->Arg(256);

void BM_GenerateThreads(benchmark::State& state) {
  pcpa::GeneratorConfig cfg;
  cfg.n_threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pcpa::generate_synthetic(cfg, 7));
  }
}
BENCHMARK(BM_GenerateThreads)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
