// Serial reference kernels against their OpenMP versions.
//   ./bench_kernels --benchmark_filter=gemv

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rtgn/eval.hpp"
#include "rtgn/kernels.hpp"

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

template <auto Fn>
void bm_gemv(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto w = noise(n * n, 1), x = noise(n, 2), b = noise(n, 3);
    std::vector<double> y(n);
    for (auto _ : st) {
        Fn(w, n, n, x, b, y);
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void bm_gemv_t(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto w = noise(n * n, 1), gy = noise(n, 2);
    std::vector<double> gx(n, 0.0);
    for (auto _ : st) {
        Fn(w, n, n, gy, gx);
        benchmark::DoNotOptimize(gx.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void bm_ger(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto gy = noise(n, 1), x = noise(n, 2);
    std::vector<double> gw(n * n, 0.0);
    for (auto _ : st) {
        Fn(gy, x, gw);
        benchmark::DoNotOptimize(gw.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void bm_auc_grid(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto mu = noise(n, 1);
    auto sigma = noise(n, 2);
    for (double& s : sigma) s = 15.0 + 5.0 * s;
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i % 17 == 0;
    const auto taus = rtgn::eval::linear_grid(5.0, 25.0, 21);
    for (auto _ : st) benchmark::DoNotOptimize(Fn(mu, sigma, y, taus));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * taus.size()));
}

}  // namespace

namespace k = rtgn::kernels;
namespace ev = rtgn::eval;

BENCHMARK(bm_gemv<k::serial::gemv>)->Name("gemv/serial")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_gemv<k::omp::gemv>)->Name("gemv/omp")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_gemv_t<k::serial::gemv_t_acc>)->Name("gemv_t_acc/serial")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_gemv_t<k::omp::gemv_t_acc>)->Name("gemv_t_acc/omp")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_ger<k::serial::ger_acc>)->Name("ger_acc/serial")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_ger<k::omp::ger_acc>)->Name("ger_acc/omp")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_auc_grid<ev::serial::auc_over_grid>)->Name("auc_over_grid/serial")->Arg(3000)->Arg(30000);
BENCHMARK(bm_auc_grid<ev::omp::auc_over_grid>)->Name("auc_over_grid/omp")->Arg(3000)->Arg(30000);

BENCHMARK_MAIN();
