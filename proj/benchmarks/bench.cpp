#include <benchmark/benchmark.h>

#include <random>

#include "tmsr/circle.hpp"
#include "tmsr/engine.hpp"
#include "tmsr/prob.hpp"
#include "tmsr/protocols.hpp"

namespace {

using namespace tmsr;

TimedConfiguration random_config(std::mt19937_64& rng, std::size_t n) {
  static const char* const preds[] = {"A", "B", "C", "D"};
  std::vector<TimedFact> facts{{Fact{kTimePredicate, {}}, Rational(static_cast<int>(rng() % 80), 8)}};
  for (std::size_t i = 0; i < n; ++i) {
    Fact f{preds[rng() % 4], {Term::fresh(rng() % 3)}};
    facts.push_back({f, Rational(static_cast<int>(rng() % 80), 8)});
  }
  return TimedConfiguration(std::move(facts));
}

void BM_Abstract(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto s = random_config(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(abstract(s, 5));
}
BENCHMARK(BM_Abstract)->Arg(4)->Arg(16)->Arg(64);

void BM_Next(benchmark::State& state) {
  std::mt19937_64 rng(2);
  auto a = abstract(random_config(rng, static_cast<std::size_t>(state.range(0))), 5);
  for (auto _ : state) {
    a = next(a);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_Next)->Arg(4)->Arg(16);

void BM_CompactKey(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = abstract(random_config(rng, static_cast<std::size_t>(state.range(0))), 5);
  std::string key;
  for (auto _ : state) {
    compact_key(a, key);
    benchmark::DoNotOptimize(key);
  }
}
BENCHMARK(BM_CompactKey)->Arg(4)->Arg(16);

void BM_CanonicalKey(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = abstract(random_config(rng, static_cast<std::size_t>(state.range(0))), 5);
  for (auto _ : state) benchmark::DoNotOptimize(canonical_key(a));
}
BENCHMARK(BM_CanonicalKey)->Arg(4)->Arg(16);

void BM_SearchDb(benchmark::State& state) {
  const auto p = build_db(DbParams::symmetric(static_cast<std::uint32_t>(state.range(0)), 2, Recording::Eager));
  std::uint64_t visited = 0;
  for (auto _ : state) {
    const auto v = search(p);
    visited = v.visited;
    benchmark::DoNotOptimize(v);
  }
  state.counters["visited"] = static_cast<double>(visited);
}
BENCHMARK(BM_SearchDb)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_McEstimate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(prob::mc_estimate(3, 0.6, 100000, 1));
}
BENCHMARK(BM_McEstimate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
