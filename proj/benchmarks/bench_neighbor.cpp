#include <benchmark/benchmark.h>

#include <vector>

#include "malens/interchange.hpp"
#include "malens/neighbor.hpp"
#include "malens/rng.hpp"

namespace {

using namespace malens;

EmbeddingMatrix random_matrix(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> values(vocab * dim);
  for (auto& v : values) v = static_cast<float>(rng.normal());
  std::vector<std::string> tokens(vocab);
  for (std::size_t i = 0; i < vocab; ++i) tokens[i] = "t" + std::to_string(i);
  return EmbeddingMatrix(dim, std::move(values), std::move(tokens));
}

RepresentationSequence random_sequence(std::size_t frames, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> values(frames * dim);
  for (auto& v : values) v = static_cast<float>(rng.normal());
  return RepresentationSequence("bench", Stage::AdapterOutput, 340, dim, std::move(values));
}

void BM_NearestSingle(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto matrix = random_matrix(vocab, dim, 1);
  const NeighborSearch search(matrix);
  const auto sequence = random_sequence(1, dim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(search.nearest(sequence.frame(0)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(vocab));
}
BENCHMARK(BM_NearestSingle)->Args({4096, 256})->Args({32000, 1024});

void BM_AssignUtterance(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto jobs = static_cast<std::size_t>(state.range(2));
  const auto matrix = random_matrix(vocab, dim, 1);
  const NeighborSearch search(matrix);
  const auto sequence = random_sequence(88, dim, 3);
  for (auto _ : state) benchmark::DoNotOptimize(assign_neighbors(sequence, search, jobs));
  state.SetItemsProcessed(state.iterations() * 88);
}
BENCHMARK(BM_AssignUtterance)
    ->Args({32000, 1024, 1})
    ->Args({32000, 1024, 4})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_SearchSetup(benchmark::State& state) {
  const auto matrix = random_matrix(32000, 1024, 1);
  for (auto _ : state) {
    NeighborSearch search(matrix);
    benchmark::DoNotOptimize(search.mean().data());
  }
}
BENCHMARK(BM_SearchSetup)->Unit(benchmark::kMillisecond);

}  // namespace
