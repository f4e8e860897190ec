#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "malens/asr_eval.hpp"
#include "malens/probes.hpp"
#include "malens/rng.hpp"
#include "malens/verdict.hpp"

namespace {

using namespace malens;

std::vector<std::string> random_tokens(std::size_t n, std::size_t alphabet, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> out(n);
  for (auto& t : out) t = "w" + std::to_string(rng.below(alphabet));
  return out;
}

void BM_EditCounts(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ref = random_tokens(n, 50, 1);
  const auto hyp = random_tokens(n + n / 4, 50, 2);
  for (auto _ : state) benchmark::DoNotOptimize(edit_counts(ref, hyp));
}
BENCHMARK(BM_EditCounts)->Arg(30)->Arg(300);

void BM_Tokenize(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 50; ++i) text += "Il était une fois, à Osaka... ";
  const auto scheme = state.range(0) == 0 ? WerScheme::Whitespace : WerScheme::Char;
  for (auto _ : state) benchmark::DoNotOptimize(tokenize_for_wer(text, scheme));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(0)->Arg(1);

void BM_OrderedPhoneMatches(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto word = random_tokens(n, 40, 3);
  const auto tokens = random_tokens(4 * n, 40, 4);
  for (auto _ : state) benchmark::DoNotOptimize(ordered_phone_matches(word, tokens));
}
BENCHMARK(BM_OrderedPhoneMatches)->Arg(8)->Arg(64);

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (auto& x : xs) x = rng.normal();
  for (auto& y : ys) y = static_cast<double>(rng.below(11));
  for (auto _ : state) benchmark::DoNotOptimize(spearman(xs, ys));
}
BENCHMARK(BM_Spearman)->Arg(1000)->Arg(100000);

}  // namespace
