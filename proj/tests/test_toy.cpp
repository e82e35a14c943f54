#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>
#include <set>

#include "logos/toy.hpp"

using namespace logos;
using namespace logos::toy;

namespace {

ToyTask simple_task(std::vector<int> answer, int id_suffix = 0) {
    ToyTask task;
    task.id = "t-" + std::to_string(id_suffix);
    task.prompt_tokens = {id_suffix, 7};
    task.answer_tokens = std::move(answer);
    task.tier = static_cast<int>(task.answer_tokens.size());
    return task;
}

// Drives the policy deterministic on the task's answer.
void make_one_hot(ToyPolicy& policy, const ToyTask& task) {
    std::vector<int> prefix;
    for (int token : task.answer_tokens) {
        policy.add_to_logit(context_key(task.prompt_tokens, prefix), token, 25.0);
        prefix.push_back(token);
    }
}

// Loss as a pure function of one parameter, for central finite differences.
double loss_at(const SampledGroup& sampled, const ToyPolicy& old_policy, ToyPolicy current,
               uint64_t ctx, int token, double delta, const ClipConfig& cfg) {
    current.add_to_logit(ctx, token, delta);
    return group_loss(sampled, old_policy, current, cfg);
}

}  // namespace

TEST_CASE("policy softmax rows are normalized") {
    ToyPolicy policy(4);
    // absent row: uniform
    auto p = policy.probs(123);
    double sum = 0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p[0] == doctest::Approx(0.25));

    policy.add_to_logit(123, 2, 1.5);
    policy.add_to_logit(123, 0, -0.5);
    p = policy.probs(123);
    sum = 0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (int v = 0; v < 4; ++v)
        CHECK(policy.log_prob(123, v) == doctest::Approx(std::log(p[v])));
    CHECK(policy.argmax_token(123) == 2);
}

TEST_CASE("context keys distinguish prompts and prefixes") {
    std::set<uint64_t> keys;
    keys.insert(context_key({1, 2}, {}));
    keys.insert(context_key({1, 2}, {0}));
    keys.insert(context_key({1, 2}, {1}));
    keys.insert(context_key({1, 3}, {}));
    keys.insert(context_key({1}, {2}));
    CHECK(keys.size() == 5);
}

TEST_CASE("sample_group") {
    SUBCASE("a deterministic policy collapses the group and ORF discards it") {
        const auto task = simple_task({2, 0});
        ToyPolicy policy(4);
        make_one_hot(policy, task);
        const auto sampled = sample_group(task, policy, 8, 42);
        REQUIRE(sampled.group.size() == 8);
        for (const auto& tokens : sampled.tokens) CHECK(tokens == task.answer_tokens);
        for (const auto& reward : sampled.group.rewards) {
            CHECK(reward.fmt == 1);
            CHECK(reward.acc == 1);
        }
        CHECK(sampled.group.avg_acc == doctest::Approx(1.0));
        CHECK(!orf_filter(sampled.group));
    }

    SUBCASE("same seed reproduces the group exactly") {
        const auto task = simple_task({1, 3});
        ToyPolicy policy(4);
        const auto a = sample_group(task, policy, 8, 77);
        const auto b = sample_group(task, policy, 8, 77);
        CHECK(a.tokens == b.tokens);
        CHECK(a.group.responses == b.group.responses);
        const auto c = sample_group(task, policy, 8, 78);
        CHECK(a.tokens != c.tokens);
    }

    SUBCASE("uniform policy accuracy concentrates at vocab^-length") {
        // 2-token answers over vocabulary 4: expected accuracy 1/16.
        const ToyPolicy policy(4);
        const int groups = 10000, g = 4;
        double correct = 0;
        for (int i = 0; i < groups; ++i) {
            const auto sampled =
                sample_group(simple_task({i % 4, (i / 4) % 4}, i), policy, g, 1000 + i);
            for (const auto& reward : sampled.group.rewards) correct += reward.acc;
        }
        const double n = static_cast<double>(groups) * g;
        const double p = 1.0 / 16.0;
        const double sigma = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(correct / n - p) <= 3 * sigma);
    }
}

TEST_CASE("token ratios are one right after snapshotting, and the loss vanishes") {
    const auto task = simple_task({0, 1});
    ToyPolicy policy(3);
    policy.add_to_logit(context_key(task.prompt_tokens, {}), 0, 0.7);
    auto sampled = sample_group(task, policy, 8, 5);
    const auto totals = sampled.group.total_rewards();
    if (!orf_keep(totals)) return;  // seed chosen to avoid this; keep the guard honest
    sampled.group.advantages = compute_advantages(totals);
    REQUIRE(sampled.group.advantages.has_value());

    const ToyPolicy snapshot = policy;  // pi_old = pi
    const auto ratios = token_ratios(sampled, snapshot, policy);
    for (const auto& row : ratios)
        for (double r : row) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    const double loss = group_loss(sampled, snapshot, policy, ClipConfig{0.2, 8});
    CHECK(std::abs(loss) <= 1e-10);
}

TEST_CASE("policy_gradient_step") {
    SUBCASE("zero advantages leave the parameters unchanged") {
        const auto task = simple_task({0});
        ToyPolicy policy(2);
        auto sampled = sample_group(task, policy, 4, 9);
        sampled.group.advantages = std::vector<double>(4, 0.0);
        const auto result = policy_gradient_step(sampled, policy, policy, ClipConfig{0.2, 4}, 0.5);
        CHECK(result.policy.table() == policy.table());
        CHECK(std::abs(result.loss) <= 1e-12);
    }

    SUBCASE("analytic gradient matches central finite differences") {
        // vocabulary 2, single-token answers: a handful of parameters.
        const auto task = simple_task({1});
        ToyPolicy current(2);
        ToyPolicy old_policy(2);
        const uint64_t ctx = context_key(task.prompt_tokens, {});
        current.add_to_logit(ctx, 0, 0.3);
        current.add_to_logit(ctx, 1, -0.2);
        old_policy.add_to_logit(ctx, 0, 0.1);

        auto sampled = sample_group(task, old_policy, 4, 21);
        const auto totals = sampled.group.total_rewards();
        REQUIRE(orf_keep(totals));
        sampled.group.advantages = compute_advantages(totals);
        REQUIRE(sampled.group.advantages.has_value());

        const ClipConfig cfg{0.2, 4};
        const auto grad = group_gradient(sampled, old_policy, current, cfg);
        const double h = 1e-6;
        for (const auto& [key, analytic] : grad) {
            const double up = loss_at(sampled, old_policy, current, key.first, key.second, h, cfg);
            const double down =
                loss_at(sampled, old_policy, current, key.first, key.second, -h, cfg);
            const double fd = (up - down) / (2 * h);
            CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
        }
    }

    SUBCASE("repeated steps drive a solvable task to full accuracy") {
        const auto task = simple_task({2, 1});
        ToyPolicy policy(4);
        double avg_acc = 0.0;
        int step = 0;
        for (; step < 200; ++step) {
            const ToyPolicy old_policy = policy;
            auto sampled = sample_group(task, old_policy, 8, 1000 + step);
            avg_acc = sampled.group.avg_acc;
            if (avg_acc == 1.0) break;
            const auto totals = sampled.group.total_rewards();
            if (!orf_keep(totals)) continue;
            sampled.group.advantages = compute_advantages(totals);
            policy = policy_gradient_step(sampled, old_policy, policy, ClipConfig{0.2, 8}, 0.5)
                         .policy;
        }
        CHECK(avg_acc == doctest::Approx(1.0));
        CHECK(step < 200);
    }

    SUBCASE("missing advantages violate the precondition") {
        const auto task = simple_task({0});
        ToyPolicy policy(2);
        auto sampled = sample_group(task, policy, 4, 2);
        CHECK_THROWS_AS(policy_gradient_step(sampled, policy, policy, ClipConfig{0.2, 4}, 0.5),
                        std::invalid_argument);
    }
}

TEST_CASE("run_curriculum") {
    SUBCASE("an unsolvable pool exhausts the curriculum at stage 1") {
        // 8-token answers over vocabulary 5: success probability 5^-8 per sample.
        std::vector<ToyTask> tasks;
        for (int i = 0; i < 20; ++i)
            tasks.push_back(simple_task({4, 3, 2, 1, 0, 1, 2, 3}, i));
        TrainConfig cfg;
        cfg.group_size = 2;
        cfg.epochs_per_stage = 1;
        cfg.seed = 3;
        CHECK_THROWS_WITH_AS(run_curriculum(tasks, cfg), "curriculum exhausted at stage 1",
                             std::runtime_error);
    }

    SUBCASE("stage keep-sets match their filters, recounted from the log") {
        const auto tasks = make_task_set(60, 99);
        TrainConfig cfg;
        cfg.epochs_per_stage = 3;
        cfg.seed = 11;
        const auto log = run_curriculum(tasks, cfg);
        REQUIRE(log.stages.size() == 2);
        for (const auto& stage : log.stages) {
            std::set<std::string> expected;
            for (const auto& [id, avg] : stage.presample) {
                const bool keep = stage.stage == 1 ? avg > 0.0 : avg < 0.5;
                if (keep) expected.insert(id);
            }
            CHECK(std::set<std::string>(stage.kept_ids.begin(), stage.kept_ids.end()) ==
                  expected);
            CHECK(stage.kept == static_cast<int>(expected.size()));
        }

        // Monotone curriculum pressure: at stage 2 the kept tasks average a
        // strictly lower presample accuracy than the discarded ones.
        const auto& stage2 = log.stages[1];
        const std::set<std::string> kept_set(stage2.kept_ids.begin(), stage2.kept_ids.end());
        double kept_sum = 0, drop_sum = 0;
        int kept_n = 0, drop_n = 0;
        for (const auto& [id, avg] : stage2.presample) {
            if (kept_set.count(id)) {
                kept_sum += avg;
                ++kept_n;
            } else {
                drop_sum += avg;
                ++drop_n;
            }
        }
        REQUIRE(kept_n > 0);
        REQUIRE(drop_n > 0);
        CHECK(kept_sum / kept_n < drop_sum / drop_n);
    }

    SUBCASE("identical configuration reproduces a byte-identical log") {
        const auto tasks = make_task_set(40, 5);
        TrainConfig cfg;
        cfg.epochs_per_stage = 2;
        cfg.seed = 17;
        const auto a = run_curriculum(tasks, cfg);
        const auto b = run_curriculum(tasks, cfg);
        CHECK(a.to_jsonl() == b.to_jsonl());
    }

    SUBCASE("empty task list violates the precondition") {
        CHECK_THROWS_AS(run_curriculum({}, TrainConfig{}), std::invalid_argument);
    }
}

TEST_CASE("make_task_set shape") {
    const auto tasks = make_task_set(200, 12345);
    REQUIRE(tasks.size() == 200);
    std::set<std::string> ids;
    std::map<int, int> tiers;
    for (const auto& task : tasks) {
        ids.insert(task.id);
        ++tiers[task.tier];
        CHECK(validate_task(task, kTaskVocab).empty());
        CHECK(task.answer_tokens.size() == static_cast<size_t>(task.tier));
    }
    CHECK(ids.size() == 200);
    CHECK(tiers[1] == 100);
    CHECK(tiers[2] == 70);
    CHECK(tiers[3] == 30);
}

TEST_CASE("task validation") {
    ToyTask bad;
    bad.id = "x";
    bad.answer_tokens = std::vector<int>(9, 0);
    CHECK(!validate_task(bad, 4).empty());
    bad.answer_tokens = {5};
    CHECK(!validate_task(bad, 4).empty());  // token outside vocabulary
    bad.answer_tokens = {3};
    CHECK(validate_task(bad, 4).empty());
}
