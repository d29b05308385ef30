#include <benchmark/benchmark.h>

#include "nmsp/ngram_attention.hpp"
#include "nmsp/ops.hpp"

namespace {

nmsp::Tensor filled(nmsp::Shape shape, std::uint64_t seed) {
  nmsp::Rng rng(seed);
  nmsp::Tensor t(shape);
  for (double& v : t.values()) v = rng.uniform() - 0.5;
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const nmsp::Tensor a = filled({n, n}, 1), b = filled({n, n}, 2);
  for (auto _ : state) {
    nmsp::Graph g(false);
    benchmark::DoNotOptimize(nmsp::matmul(g.constant(a), g.constant(b)).value());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const std::size_t n = state.range(0);
  nmsp::Tensor a = filled({n, n}, 1), b = filled({n, n}, 2);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  for (auto _ : state) {
    nmsp::Graph g;
    g.backward(nmsp::sum(nmsp::matmul(g.param(a), g.param(b))));
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64);

void BM_SoftmaxRows(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const nmsp::Tensor x = filled({n, n}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nmsp::softmax_rows(x));
}
BENCHMARK(BM_SoftmaxRows)->Arg(32)->Arg(128);

void BM_BuildMask(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(nmsp::NGramAttentionMask::build(nmsp::NGramMode::trigram, state.range(0)));
}
BENCHMARK(BM_BuildMask)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
