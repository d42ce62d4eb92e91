#include "splatsim/neuralsort.hpp"
#include "splatsim/projection.hpp"
#include "splatsim/raster.hpp"
#include "splatsim/scene.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace splatsim;

namespace {

ProjectedGaussian offset_gaussian(double mx, double my) {
    ProjectedGaussian pg;
    pg.mean_x = mx;
    pg.mean_y = my;
    pg.cov2d = {9.0, 2.0, 6.0};
    const double det = 9.0 * 6.0 - 4.0;
    pg.neg_half_a = -0.5 * 6.0 / det;
    pg.neg_half_b = -0.5 * 9.0 / det;
    pg.c = 2.0 / det;
    pg.opacity = 0.7;
    return pg;
}

const ProjectionResult& layered_projection() {
    static const ProjectionResult proj = [] {
        SyntheticSpec spec;
        spec.preset = SyntheticPreset::layers;
        spec.count = 2000;
        spec.width = spec.height = 128;
        const auto synth = make_synthetic_scene(spec, 1);
        return project_scene(synth.scene, synth.cameras[0]);
    }();
    return proj;
}

} // namespace

// Per Gaussian per tile: 256 expanded-form evaluations.
static void BM_AlphaNaiveTile(benchmark::State& state) {
    const auto pg = offset_gaussian(7.3, 8.1);
    OpCounts counts;
    for (auto _ : state) {
        double sum = 0.0;
        for (int y = 0; y < kTileSize; ++y)
            for (int x = 0; x < kTileSize; ++x) sum += alpha_naive(pg, x, y, Alu{}, 0.99, counts);
        benchmark::DoNotOptimize(sum);
    }
}
BENCHMARK(BM_AlphaNaiveTile);

// Same tile through the X-PE/Y-PE lines and the 2 mul + 2 add pixel path.
static void BM_AlphaAxisTile(benchmark::State& state) {
    const auto pg = offset_gaussian(7.3, 8.1);
    OpCounts counts;
    for (auto _ : state) {
        const auto tile = alpha_axis_tile(pg, axis_terms(pg, 0, 0, Alu{}, counts), Alu{}, 0.99, counts);
        benchmark::DoNotOptimize(tile.data());
    }
}
BENCHMARK(BM_AlphaAxisTile);

static void BM_AlphaAxisTileFp16(benchmark::State& state) {
    const Alu alu(Arith::fp16);
    const auto pg = quantize(offset_gaussian(7.3, 8.1), alu);
    OpCounts counts;
    for (auto _ : state) {
        const auto tile = alpha_axis_tile(pg, axis_terms(pg, 0, 0, alu, counts), alu, 0.99, counts);
        benchmark::DoNotOptimize(tile.data());
    }
}
BENCHMARK(BM_AlphaAxisTileFp16);

static void BM_RenderSorted(benchmark::State& state) {
    const auto& proj = layered_projection();
    RenderOptions opt;
    opt.alpha_path = state.range(0) ? AlphaPath::axis : AlphaPath::naive;
    opt.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(render_frame(proj, opt).image.data.data());
    state.SetLabel(state.range(0) ? "axis" : "naive");
}
BENCHMARK(BM_RenderSorted)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_RenderWeighted(benchmark::State& state) {
    const auto& proj = layered_projection();
    const auto decay = compute_decay(proj, init_mlp(MlpShape{}, 1), DepthNorm::frame_max);
    RenderOptions opt;
    opt.mode = BlendMode::weighted;
    opt.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(render_frame(proj, opt, decay).image.data.data());
}
BENCHMARK(BM_RenderWeighted)->Unit(benchmark::kMillisecond);

static void BM_ProjectScene(benchmark::State& state) {
    SyntheticSpec spec;
    spec.preset = SyntheticPreset::layers;
    spec.count = 2000;
    spec.width = spec.height = 128;
    const auto synth = make_synthetic_scene(spec, 1);
    for (auto _ : state) benchmark::DoNotOptimize(project_scene(synth.scene, synth.cameras[0]).gaussians.data());
}
BENCHMARK(BM_ProjectScene)->Unit(benchmark::kMillisecond);
