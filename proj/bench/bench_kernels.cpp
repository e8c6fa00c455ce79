// Serial reference kernels against the OpenMP versions, and a serial
// against a parallel batch gradient.

#include <benchmark/benchmark.h>

#include "mrcner/kernels.hpp"
#include "mrcner/random.hpp"
#include "mrcner/synthetic.hpp"
#include "mrcner/trainer.hpp"

using namespace mrcner;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

template <bool Parallel>
void matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 64, 1), b = random_matrix(64, 256, 2);
  Matrix out(n, 256);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::matmul(a, b, out);
    else
      kernels::reference::matmul(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * 64 * 256));
}

template <bool Parallel>
void matmul_at_b(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 64, 3), b = random_matrix(n, 256, 4);
  Matrix out(64, 256);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::matmul_at_b_acc(a, b, out);
    else
      kernels::reference::matmul_at_b_acc(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * 64 * 256));
}

template <bool Parallel>
void matmul_a_bt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 64, 5), b = random_matrix(n, 64, 6);
  Matrix out(n, n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::matmul_a_bt(a, b, out);
    else
      kernels::reference::matmul_a_bt(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * 64));
}

struct BatchFixture {
  Model model;
  std::vector<MrcExample> examples;
  std::vector<const MrcExample*> batch;
  std::vector<std::uint64_t> seeds;

  BatchFixture() {
    SyntheticOptions o;
    o.sentences = 16;
    const auto corpus = synthetic_corpus(o, 1);
    const auto q = make_query("CHEMICAL", QueryStrategy::top(3), {"chem1", "chem2", "chem3"});
    const auto triples = make_triples(corpus, std::span(&q, 1));
    ModelConfig cfg;
    cfg.seq.seq_len = 64;
    model = Model::initialize(cfg, build_vocab(corpus, std::span(&q, 1), 1), 7);
    for (const auto& t : triples) examples.push_back(example_for(model, t));
    for (std::size_t i = 0; i < examples.size(); ++i) {
      batch.push_back(&examples[i]);
      seeds.push_back(i);
    }
  }
};

template <bool Parallel>
void batch_grad(benchmark::State& state) {
  static const BatchFixture fx;
  for (auto _ : state) {
    auto g = batch_gradient(fx.model, fx.batch, fx.seeds, Parallel);
    benchmark::DoNotOptimize(g.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(fx.batch.size()));
}

}  // namespace

BENCHMARK(matmul<false>)->Name("matmul/serial")->Arg(128)->Arg(1024);
BENCHMARK(matmul<true>)->Name("matmul/openmp")->Arg(128)->Arg(1024);
BENCHMARK(matmul_at_b<false>)->Name("matmul_at_b/serial")->Arg(128)->Arg(1024);
BENCHMARK(matmul_at_b<true>)->Name("matmul_at_b/openmp")->Arg(128)->Arg(1024);
BENCHMARK(matmul_a_bt<false>)->Name("matmul_a_bt/serial")->Arg(128)->Arg(512);
BENCHMARK(matmul_a_bt<true>)->Name("matmul_a_bt/openmp")->Arg(128)->Arg(512);
BENCHMARK(batch_grad<false>)->Name("batch_gradient/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(batch_grad<true>)->Name("batch_gradient/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
