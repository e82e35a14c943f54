#include <benchmark/benchmark.h>

#include "logos/toy.hpp"

using namespace logos;
using namespace logos::toy;

static void BM_SampleGroup(benchmark::State& state) {
    const auto tasks = make_task_set(1, 42);
    const ToyPolicy policy(kTaskVocab);
    uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_group(tasks[0], policy, 8, seed++));
    }
}
BENCHMARK(BM_SampleGroup);

static void BM_PolicyGradientStep(benchmark::State& state) {
    const auto tasks = make_task_set(16, 42);
    ToyPolicy policy(kTaskVocab);
    // Warm the policy so groups are non-degenerate more often.
    uint64_t seed = 1000;
    SampledGroup sampled;
    for (;; ++seed) {
        sampled = sample_group(tasks[0], policy, 8, seed);
        const auto totals = sampled.group.total_rewards();
        if (orf_keep(totals)) {
            sampled.group.advantages = compute_advantages(totals);
            break;
        }
    }
    const ClipConfig cfg{0.2, 8};
    for (auto _ : state) {
        auto result = policy_gradient_step(sampled, policy, policy, cfg, 0.1);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_PolicyGradientStep);

static void BM_CurriculumEpoch(benchmark::State& state) {
    const auto tasks = make_task_set(50, 42);
    TrainConfig cfg;
    cfg.epochs_per_stage = 1;
    cfg.curriculum_rounds = 1;
    cfg.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_curriculum(tasks, cfg));
    }
}
BENCHMARK(BM_CurriculumEpoch);

BENCHMARK_MAIN();
