#include <benchmark/benchmark.h>

#include "svt/attention.hpp"
#include "svt/kernels.hpp"
#include "svt/neuron.hpp"
#include "svt/rng.hpp"

namespace {

svt::SpikeTensor random_spikes(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    svt::Rng rng(seed);
    return svt::SpikeTensor::random(svt::Shape{rows, cols}, rng);
}

void BM_SignedBinaryMatmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_spikes(n, n, 1);
    const auto b = random_spikes(n, n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svt::signed_binary_matmul(a, b));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SignedBinaryMatmul)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_SdhaLinear(benchmark::State& state) {
    const auto l = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 64;
    const auto q = random_spikes(l, d, 3);
    const auto k = random_spikes(l, d, 4);
    const auto v = random_spikes(l, d, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svt::sdha(q, k, v));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SdhaLinear)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_SdhaQuadratic(benchmark::State& state) {
    const auto l = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 64;
    const auto q = random_spikes(l, d, 3);
    const auto k = random_spikes(l, d, 4);
    const auto v = random_spikes(l, d, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svt::sdha_quadratic(q, k, v));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SdhaQuadratic)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_LifSequence(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    svt::Rng rng(6);
    svt::RealTensor x(svt::Shape{16, n});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.gaussian();
    svt::NeuronConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(svt::lif_sequence(x, cfg));
    }
}
BENCHMARK(BM_LifSequence)->RangeMultiplier(4)->Range(256, 16384);

} // namespace

BENCHMARK_MAIN();
