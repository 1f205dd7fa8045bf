#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/classify.hpp"
#include "cmpm/engine.hpp"
#include "cmpm/eval.hpp"
#include "cmpm/parallel.hpp"

namespace {

using namespace cmpm;

Dataset normalized_blobs(std::size_t n, std::size_t dims) {
  const auto raw = synth_data_gen(n, dims, 8, 0.3, 5);
  return apply_normalizer(fit_normalizer(raw), raw);
}

// One 1-NN query against a model of state.range(0) exemplars.
void BM_KnnScan(benchmark::State& state) {
  const auto d = normalized_blobs(static_cast<std::size_t>(state.range(0)), 5);
  const LabeledVectors ex{d.values, d.labels};
  const std::vector<double> query(5, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(knn_vote(ex, query, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnScan)->Arg(100)->Arg(1000)->Arg(10000);

void BM_BuildSimilarity(benchmark::State& state) {
  const auto d = normalized_blobs(static_cast<std::size_t>(state.range(0)), 12);
  for (auto _ : state) benchmark::DoNotOptimize(build_similarity(d, -1.0));
}
BENCHMARK(BM_BuildSimilarity)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ParallelSimilarity(benchmark::State& state) {
  const auto d = normalized_blobs(500, 12);
  const EnginePlan plan{static_cast<std::size_t>(state.range(0)), 16};
  for (auto _ : state) benchmark::DoNotOptimize(parallel_similarity(d, -1.0, plan));
}
BENCHMARK(BM_ParallelSimilarity)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

// One responsibility + availability round.
void BM_ApIteration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = build_similarity(normalized_blobs(n, 12), -1.0);
  auto st = MessageState::zeros(n);
  for (auto _ : state) {
    update_responsibility(s, st, 0.8);
    update_availability(st, 0.8);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_ApIteration)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ParallelApIteration(benchmark::State& state) {
  const auto s = build_similarity(normalized_blobs(500, 12), -1.0);
  const EnginePlan plan{static_cast<std::size_t>(state.range(0)), 16};
  auto cells = make_point_grid(s);
  for (auto _ : state) {
    cells = parallel_responsibility(cells, 0.8, plan);
    cells = parallel_availability(cells, 0.8, plan);
  }
}
BENCHMARK(BM_ParallelApIteration)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

// Map/shuffle/reduce over dense integer keys.
void BM_EngineShuffle(benchmark::State& state) {
  std::vector<int> input(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = static_cast<int>(i);
  const EnginePlan plan{4, 16};
  for (auto _ : state) {
    auto out = run_mapreduce<int, int, long, int>(
        std::span<const int>(input), [](const int& v, Emitter<int, int>& out) { out.emit(v % 1024, v); },
        [](const int& key, std::span<int> values, OutputSink<long>& sink) {
          long total = key;
          for (int v : values) total += v;
          sink.emit(total);
        },
        plan);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EngineShuffle)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
