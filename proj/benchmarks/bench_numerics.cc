#include <benchmark/benchmark.h>

#include "flowddi/rng.hpp"
#include "flowddi/tape.hpp"
#include "flowddi/tensor.hpp"

using namespace flowddi;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal();
  return t;
}

void BM_MatmulForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, 32}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}
BENCHMARK(BM_MatmulForward)->Arg(50)->Arg(200);

void BM_TapeMatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, 32}, rng);
  for (auto _ : state) {
    Tape tape;
    Value va = tape.parameter(a);
    Value vb = tape.parameter(b);
    Value loss = tape.sum(tape.tanh(tape.matmul(va, vb)));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(vb));
  }
}
BENCHMARK(BM_TapeMatmulBackward)->Arg(50)->Arg(200);

void BM_SoftmaxRows(benchmark::State& state) {
  Rng rng(2);
  Tensor scores = random_tensor({1000, 16}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(softmax_rows(scores));
}
BENCHMARK(BM_SoftmaxRows);

}  // namespace

BENCHMARK_MAIN();
