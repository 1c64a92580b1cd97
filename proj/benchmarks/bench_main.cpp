#include <benchmark/benchmark.h>

#include <map>

#include "demcorrect/dataset.hpp"
#include "demcorrect/gbdt.hpp"
#include "demcorrect/linear_stats.hpp"
#include "demcorrect/synth.hpp"
#include "demcorrect/terrain.hpp"

using namespace demcorrect;

namespace {

const Grid& dem(int k) {
    static std::map<int, Grid> cache;
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, fractal_dem(k, 500, 300, 0.5, 42)).first;
    return it->second;
}

SampleTable table(int k) {
    const Grid& d = dem(k);
    const Landcover lc = synth_landcover(d, 43);
    const FeatureStack stack = build_feature_stack(d, lc.bare, lc.urban, lc.forest, TerrainConfig{});
    const InjectedError e = inject_error(d, stack, ErrorSpec{{{"slope", 1.0}}, {{"elevation", TermKind::sine, 3.0, 2.5, ""}}, 0.1, 1});
    return extract_samples(stack, difference(e.degraded, d), nullptr, 1.0, 1);
}

void BM_Slope(benchmark::State& state) {
    const Grid& d = dem(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(slope(d));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}

void BM_Texture(benchmark::State& state) {
    const Grid& d = dem(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(texture(d, 1.0, {10, 1.0}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}

void BM_Vrm(benchmark::State& state) {
    const Grid& d = dem(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vrm(d, {3, 1.0}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}

void BM_FeatureStack(benchmark::State& state) {
    const Grid& d = dem(static_cast<int>(state.range(0)));
    const Landcover lc = synth_landcover(d, 43);
    for (auto _ : state) benchmark::DoNotOptimize(build_feature_stack(d, lc.bare, lc.urban, lc.forest, TerrainConfig{}));
}

void BM_FitOls(benchmark::State& state) {
    const SampleTable t = table(7);
    for (auto _ : state) benchmark::DoNotOptimize(fit_ols(t, t.feature_names));
}

void BM_FitGbdt(benchmark::State& state) {
    const SampleTable t = table(7);
    GbdtParams p;
    p.n_trees = 20;
    p.growth = state.range(0) ? Growth::leafwise : Growth::depthwise;
    for (auto _ : state) benchmark::DoNotOptimize(fit_gbdt(t, p));
}

}  // namespace

BENCHMARK(BM_Slope)->Arg(7)->Arg(9);
BENCHMARK(BM_Texture)->Arg(7)->Arg(8);
BENCHMARK(BM_Vrm)->Arg(7)->Arg(8);
BENCHMARK(BM_FeatureStack)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitOls)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitGbdt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
