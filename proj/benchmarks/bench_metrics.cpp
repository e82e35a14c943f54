#include <benchmark/benchmark.h>

#include "logos/factuality.hpp"
#include "logos/grpo.hpp"
#include "logos/report.hpp"
#include "logos/rng.hpp"

using namespace logos;

static void BM_FactualityF1(benchmark::State& state) {
    Rng rng(1);
    std::vector<MatchVectors> inputs;
    for (int i = 0; i < 1024; ++i) {
        MatchVectors v;
        v.m_pred.resize(1 + rng.bounded(10));
        v.m_gt.resize(1 + rng.bounded(10));
        for (auto& b : v.m_pred) b = static_cast<int>(rng.bounded(2));
        for (auto& b : v.m_gt) b = static_cast<int>(rng.bounded(2));
        inputs.push_back(std::move(v));
    }
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(factuality_f1(inputs[i++ & 1023]));
    }
}
BENCHMARK(BM_FactualityF1);

static void BM_ComputeAdvantages(benchmark::State& state) {
    const size_t g = static_cast<size_t>(state.range(0));
    Rng rng(2);
    std::vector<double> rewards(g);
    for (auto& r : rewards) r = static_cast<double>(rng.bounded(3));
    rewards[0] = 2;  // keep the group non-degenerate
    rewards[1] = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_advantages(rewards));
    }
}
BENCHMARK(BM_ComputeAdvantages)->Arg(8)->Arg(64);

static void BM_GrpoLoss(benchmark::State& state) {
    const int g = 8;
    Rng rng(3);
    std::vector<std::vector<double>> ratios(g);
    for (auto& row : ratios) {
        row.resize(64);
        for (auto& r : row) r = std::exp(rng.gauss() * 0.1);
    }
    std::vector<double> rewards(g);
    for (auto& r : rewards) r = static_cast<double>(rng.bounded(3));
    rewards[0] = 2;
    rewards[1] = 0;
    const auto advantages = compute_advantages(rewards);
    const ClipConfig cfg{0.2, g};
    for (auto _ : state) {
        benchmark::DoNotOptimize(grpo_loss(ratios, *advantages, cfg));
    }
}
BENCHMARK(BM_GrpoLoss);

static void BM_Pearson(benchmark::State& state) {
    const size_t n = static_cast<size_t>(state.range(0));
    Rng rng(4);
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
        x[i] = rng.gauss();
        y[i] = 0.7 * x[i] + rng.gauss();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(pearson(x, y));
    }
}
BENCHMARK(BM_Pearson)->Arg(22)->Arg(1000);
