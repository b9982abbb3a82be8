// Parallel kernels against their serial references.
//   ./samosa_bench --benchmark_filter=LossGrad

#include <benchmark/benchmark.h>
#include <omp.h>

#include "samosa/model.hpp"
#include "samosa/scoring.hpp"
#include "samosa/synthdata.hpp"

using namespace samosa;

namespace {

struct Fixture {
  Dataset data;
  std::vector<std::size_t> ids;
  std::vector<BatchItem> batch;
  ModelParams a, b;

  explicit Fixture(std::size_t per_class) {
    GenConfig g;
    g.per_class = per_class;
    Rng rng(17);
    auto pool = build_openset_pool(g, 0.4, 0.05, 0.25, rng);
    data = std::move(pool.data);
    ids.resize(data.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    for (const auto& ex : data.examples) {
      if (ex.is_known) batch.push_back({&ex.x, ex.true_class});
    }
    const std::size_t heads = data.num_known + 1;
    a = init_params(16, g.dim, heads, 0.05, rng);
    b = init_params(16, g.dim, heads, 0.05, rng);
  }
};

const Fixture& fixture(std::size_t per_class) {
  static const Fixture small(50), large(200);
  return per_class <= 50 ? small : large;
}

void LossGradParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(f.a, f.batch));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.batch.size()));
  state.counters["threads"] = omp_get_max_threads();
}

void LossGradSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad_serial(f.a, f.batch));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.batch.size()));
}

void ScorePoolParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(score_pool(f.data, f.ids, f.a, f.b, f.data.num_known));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.ids.size()));
  state.counters["threads"] = omp_get_max_threads();
}

void ScorePoolSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(score_pool_serial(f.data, f.ids, f.a, f.b, f.data.num_known));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.ids.size()));
}

}  // namespace

BENCHMARK(LossGradParallel)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);
BENCHMARK(LossGradSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);
BENCHMARK(ScorePoolParallel)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);
BENCHMARK(ScorePoolSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
