#include "clelab/cle_measure.hpp"
#include "clelab/gff.hpp"
#include "clelab/gmc.hpp"
#include "clelab/loewner.hpp"
#include "clelab/loopsoup.hpp"
#include "clelab/natural_param.hpp"
#include "clelab/params.hpp"
#include "clelab/special.hpp"

#include <benchmark/benchmark.h>

using namespace clelab;

static void BM_GffSample(benchmark::State& state) {
    auto fact = make_gff_factorization(static_cast<std::size_t>(state.range(0)),
                                       GffDomain::Disk);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(fact->sample(++seed).values);
}
BENCHMARK(BM_GffSample)->Arg(65)->Arg(129);

static void BM_SleTrace(benchmark::State& state) {
    const DrivingFunction w =
        sample_sle_driving(4.0, 1e-4, static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(trace_from_driving(w).points);
}
BENCHMARK(BM_SleTrace)->Arg(1000)->Arg(10000);

static void BM_LoopSoup(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_loop_soup(1.0, 1e-3, 1.0, 128, ++seed).loops);
}
BENCHMARK(BM_LoopSoup);

static void BM_CarpetFromClusters(benchmark::State& state) {
    const LoopSoup soup = sample_loop_soup(1.0, 1e-3, 1.0, 128, 7);
    const auto clusters = cluster_loops(soup, 128);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            carpet_from_clusters(soup, clusters, static_cast<std::size_t>(state.range(0)))
                .carpet);
}
BENCHMARK(BM_CarpetFromClusters)->Arg(128)->Arg(256);

static void BM_CarpetMeasure(benchmark::State& state) {
    const SleParams p = derive_params(3.5);
    auto fact = make_gff_factorization(65, GffDomain::Disk);
    const LoopSoup soup = sample_loop_soup(*p.soup_intensity, 1e-3, 1.0, 128, 7);
    const CleSample cle = carpet_from_clusters(soup, cluster_loops(soup, 128), 128);
    XiConfig cfg;
    cfg.n_fields = 1;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        cfg.seed = ++seed;
        benchmark::DoNotOptimize(estimate_xi(cle, p, fact, cfg).mass);
    }
}
BENCHMARK(BM_CarpetMeasure);

static void BM_BoxDimension(benchmark::State& state) {
    BoolGrid g(512, 512, 0.0, 0.0, 1.0, 1.0, 0);
    for (std::size_t y = 0; y < 512; ++y)
        for (std::size_t x = 0; x < 512; ++x)
            if (((x * x + y * 7) % 11) < 3) g.at(x, y) = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(box_dimension(g, {1, 2, 4, 8, 16, 32}).dimension);
}
BENCHMARK(BM_BoxDimension);

static void BM_TransitionDensity(benchmark::State& state) {
    BesselDensitySpec spec;
    spec.a = 0.5;
    spec.s = 0.5;
    const RadialBesselDensity p(spec);
    double y = 0.1;
    for (auto _ : state) {
        y = y < 3.0 ? y + 1e-4 : 0.1;
        benchmark::DoNotOptimize(p(1.2, y));
    }
}
BENCHMARK(BM_TransitionDensity);

BENCHMARK_MAIN();
