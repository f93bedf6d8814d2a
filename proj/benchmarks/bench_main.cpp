#include <benchmark/benchmark.h>

#include "aeromtl/balancing.hpp"
#include "aeromtl/inference.hpp"
#include "aeromtl/metrics.hpp"
#include "aeromtl/ops.hpp"
#include "aeromtl/synth.hpp"
#include "aeromtl/trainer.hpp"

using namespace aeromtl;

namespace {

Tensor random_tensor(const Shape& shape, std::uint64_t seed, bool requires_grad = false) {
    Rng rng = derive_rng(seed, 0);
    Tensor t(shape, requires_grad);
    for (auto& v : t.data()) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    return t;
}

ModelConfig desk_model() {
    ModelConfig c;
    c.encoder_depth = 3;
    c.base_channels = 8;
    return c;
}

void BM_Conv2dForward(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
    const Tensor x = random_tensor(Shape{2, c, s, s}, 1), w = random_tensor(Shape{c, c, 3, 3}, 2),
                 b = random_tensor(Shape{c}, 3);
    Graph g(false);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d(g, x, w, b, 1, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * c * c * 9 * s * s));
}
BENCHMARK(BM_Conv2dForward)->Args({8, 64})->Args({32, 32})->Args({64, 16});

void BM_Conv2dBackward(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
    const Tensor x = random_tensor(Shape{2, c, s, s}, 1, true), w = random_tensor(Shape{c, c, 3, 3}, 2, true),
                 b = random_tensor(Shape{c}, 3, true);
    for (auto _ : state) {
        Graph g;
        g.backward(sum(g, conv2d(g, x, w, b, 1, 1)));
    }
}
BENCHMARK(BM_Conv2dBackward)->Args({8, 64})->Args({32, 32});

void BM_ModelForward(benchmark::State& state) {
    const MtlModel m = build_model(desk_model());
    const auto s = static_cast<std::size_t>(state.range(0));
    const Tensor x = random_tensor(Shape{1, 3, s, s}, 4);
    Rng rng(0);
    for (auto _ : state) {
        Graph g(false);
        benchmark::DoNotOptimize(m.forward(g, x, ForwardMode::eval, rng));
    }
}
BENCHMARK(BM_ModelForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
    RunConfig c;
    c.model = desk_model();
    c.balancing = static_cast<Strategy>(state.range(0));
    c.crop_size = 64;
    c.batch_size = 2;
    c.iterations = 1u << 30;
    c.resolution_factor = 1;
    auto scene = synth_scene(0, 256);
    Trainer t(c, {Tile{scene.rgb, scene.height, scene.labels}});
    for (auto _ : state) benchmark::DoNotOptimize(t.step());
    state.SetLabel(std::string(to_string(c.balancing)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Strategy::equal))
    ->Arg(static_cast<int>(Strategy::gradnorm))
    ->Arg(static_cast<int>(Strategy::mgda))
    ->Arg(static_cast<int>(Strategy::mgda_ub))
    ->Unit(benchmark::kMillisecond);

void BM_MinNorm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor a = random_tensor(Shape{n}, 5), b = random_tensor(Shape{n}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(min_norm_2task(a.data(), b.data()));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * sizeof(float)));
}
BENCHMARK(BM_MinNorm)->Arg(1 << 10)->Arg(1 << 18);

void BM_TiledPredict(benchmark::State& state) {
    const MtlModel m = build_model(desk_model());
    const Raster rgb = synth_scene(1, 256).rgb;
    const GaussianWindow window(128, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(tiled_predict(m, rgb, window));
}
BENCHMARK(BM_TiledPredict)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BlendOnly(benchmark::State& state) {
    const Raster rgb = synth_scene(1, 256).rgb;
    const GaussianWindow window(128, 32);
    const PatchPredictor flat = [](const Raster& p) {
        return PatchPrediction{std::vector<float>(p.pixels(), 1.0f), std::vector<float>(6 * p.pixels(), 0.0f)};
    };
    for (auto _ : state) benchmark::DoNotOptimize(blend_tiles(rgb, window, 6, flat));
}
BENCHMARK(BM_BlendOnly)->Unit(benchmark::kMillisecond);

void BM_ConfusionAccumulate(benchmark::State& state) {
    const auto scene = synth_scene(2, 512);
    for (auto _ : state) {
        ConfusionMatrix cm(6);
        cm.accumulate(scene.labels, scene.labels);
        benchmark::DoNotOptimize(cm.kappa());
    }
    state.SetItemsProcessed(state.iterations() * 512 * 512);
}
BENCHMARK(BM_ConfusionAccumulate);

}  // namespace

BENCHMARK_MAIN();
