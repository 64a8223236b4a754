// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "te/kernels.hpp"
#include "te/random.hpp"
#include "te/sketch.hpp"

namespace {

using namespace te;

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix M(rows, cols);
    for (auto& v : M.data()) v = rng.normal();
    return M;
}

struct Fixture {
    Matrix sketch, sources, images;

    Fixture(std::size_t k, std::size_t m, std::size_t d)
        : sketch(generate_sketch(m, d, Distribution::Rademacher, 1).entries()), sources(gaussian(k, d, 2)) {
        images = kernels::serial::apply_rows(sketch, sources);
    }
};

template <auto Kernel>
void BM_apply_rows(benchmark::State& state) {
    const Fixture f(static_cast<std::size_t>(state.range(0)), 256, 512);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.sketch, f.sources));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_midpoint_max(benchmark::State& state) {
    const Fixture f(static_cast<std::size_t>(state.range(0)), 64, 128);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.images, f.sources));
    state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}

template <auto Kernel>
void BM_sampled_max(benchmark::State& state) {
    const Fixture f(256, 64, 128);
    const auto count = static_cast<std::size_t>(state.range(0));
    const kernels::WeightGenerator gen = [](std::size_t s, kernels::SparseWeights& w) {
        Rng rng(item_seed(7, s));
        double total = 0.0;
        for (std::size_t i = 0; i < 16; ++i) {
            w.index.push_back(rng.index(256));
            w.weight.push_back(rng.exponential());
            total += w.weight.back();
        }
        for (auto& v : w.weight) v /= total;
    };
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.images, f.sources, count, gen));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_grid_max(benchmark::State& state) {
    const Fixture f(4, 3, 4);
    const auto gi = kernels::gram(f.images), gs = kernels::gram(f.sources);
    const auto steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(gi, gs, steps));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kernels::grid_point_count(4, steps)));
}

}  // namespace

BENCHMARK(BM_apply_rows<kernels::serial::apply_rows>)->Name("apply_rows/serial")->Arg(256)->Arg(4096);
BENCHMARK(BM_apply_rows<kernels::omp::apply_rows>)->Name("apply_rows/omp")->Arg(256)->Arg(4096);
BENCHMARK(BM_midpoint_max<kernels::serial::midpoint_max>)->Name("midpoint_max/serial")->Arg(512)->Arg(2048);
BENCHMARK(BM_midpoint_max<kernels::omp::midpoint_max>)->Name("midpoint_max/omp")->Arg(512)->Arg(2048);
BENCHMARK(BM_sampled_max<kernels::serial::sampled_max>)->Name("sampled_max/serial")->Arg(10000);
BENCHMARK(BM_sampled_max<kernels::omp::sampled_max>)->Name("sampled_max/omp")->Arg(10000);
BENCHMARK(BM_grid_max<kernels::serial::grid_max>)->Name("grid_max/serial")->Arg(100)->Arg(400);
BENCHMARK(BM_grid_max<kernels::omp::grid_max>)->Name("grid_max/omp")->Arg(100)->Arg(400);

BENCHMARK_MAIN();
