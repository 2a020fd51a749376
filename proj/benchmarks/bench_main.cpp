#include <random>

#include <benchmark/benchmark.h>

#include "reflex/edge_classifier.hpp"
#include "reflex/nn_util.hpp"
#include "reflex/pipeline_eval.hpp"

using namespace reflex;

namespace {

Image texture(int size) {
    std::mt19937_64 rng(1);
    return procedural_texture(size, size, rng);
}

void BM_EdgeImage(benchmark::State& state) {
    const Image img = texture(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(edge_image(img));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_EdgeImage)->Arg(64)->Arg(256);

void BM_Warp(benchmark::State& state) {
    torch::manual_seed(1);
    const auto n = state.range(0);
    const auto img = torch::rand({1, 3, n, n});
    const auto d = torch::rand({1, 1, n, n}) * 3;
    for (auto _ : state) benchmark::DoNotOptimize(warp(img, d, 1.5));
}
BENCHMARK(BM_Warp)->Arg(64)->Arg(256);

void BM_KMeans(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> v(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 3.0 * static_cast<double>(i % 3) + n(rng);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_thresholds(v));
}
BENCHMARK(BM_KMeans)->Arg(500)->Arg(2000);

void BM_DepthInference(benchmark::State& state) {
    set_deterministic(1);
    DepthNetConfig cfg;
    cfg.channels = {32, 16, 16, 16, 16, 16, 16, 1};
    DepthNet net = build_depth_net(cfg, 1);
    SynthConfig s;
    const MixtureSample sample = synth_sample(s, 3);
    for (auto _ : state) benchmark::DoNotOptimize(infer_edge_depth(net, sample.stack));
}
BENCHMARK(BM_DepthInference)->Unit(benchmark::kMillisecond);

void BM_GeneratorForward(benchmark::State& state) {
    set_deterministic(1);
    GeneratorConfig g = default_regen_generator_config();
    g.base_channels = static_cast<int>(state.range(0));
    UNet net(g);
    net->eval();
    torch::NoGradGuard ng;
    const auto z = torch::rand({1, kRegenInputChannels, 64, 64});
    for (auto _ : state) benchmark::DoNotOptimize(net->forward(z));
}
BENCHMARK(BM_GeneratorForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
