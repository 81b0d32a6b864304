#include <benchmark/benchmark.h>

#include "spinesim/branching.hpp"
#include "spinesim/entrance_law.hpp"
#include "spinesim/parallel.hpp"
#include "spinesim/spine.hpp"

using namespace spinesim;

namespace {

const ModelParams kParams{10, 200};

double census_size(std::size_t, Rng& rng)
{
    return double(simulate_census(kParams, kParams.N, rng).last_generation.size());
}

double spine_length(std::size_t, Rng& rng)
{
    return spine_path_continuous({0, 1e4}, 1.0, rng).back().length();
}

template <double (*Fn)(std::size_t, Rng&)>
void serial(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(map_replicates_serial<double>(n, 1, 0x99, Fn));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <double (*Fn)(std::size_t, Rng&)>
void openmp(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const RunContext ctx{1, static_cast<int>(state.range(1))};
    for (auto _ : state)
        benchmark::DoNotOptimize(map_replicates<double>(n, ctx, 0x99, Fn));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void thread_args(benchmark::internal::Benchmark* b)
{
    for (int th : {1, 2, 4, 8})
        b->Args({4096, th});
}

}  // namespace

BENCHMARK(serial<census_size>)->Name("census/serial")->Arg(4096)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(openmp<census_size>)->Name("census/openmp")->Apply(thread_args)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(serial<spine_length>)->Name("spine/serial")->Arg(4096)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(openmp<spine_length>)->Name("spine/openmp")->Apply(thread_args)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
