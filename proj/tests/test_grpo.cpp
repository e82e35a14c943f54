#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "logos/grpo.hpp"
#include "logos/rng.hpp"

using namespace logos;

TEST_CASE("compute_reward") {
    const auto key = AnswerKey::multiple_choice('B');

    SUBCASE("well-formed and correct earns both rewards") {
        const auto r = compute_reward("<think>a</think><answer>B</answer>", key);
        CHECK(r.fmt == 1);
        CHECK(r.acc == 1);
        CHECK(r.total() == 2);
    }
    SUBCASE("answer block alone earns only the accuracy reward") {
        const auto r = compute_reward("<answer>B</answer>", key);
        CHECK(r.fmt == 0);
        CHECK(r.acc == 1);
        CHECK(r.total() == 1);
    }
    SUBCASE("free prose with the wrong answer earns nothing") {
        const auto r = compute_reward("I believe the answer is C.", key);
        CHECK(r.fmt == 0);
        CHECK(r.acc == 0);
    }
    SUBCASE("prose without a block earns no accuracy even when right") {
        const auto r = compute_reward("it is B", key);
        CHECK(r.acc == 0);
    }
    SUBCASE("surrounding whitespace is tolerated by the format check") {
        CHECK(compute_reward("  <think>x</think>\n<answer>B</answer>\n", key).fmt == 1);
    }
    SUBCASE("format violations") {
        CHECK(has_valid_format("<answer>B</answer><think>x</think>") == false);  // wrong order
        CHECK(has_valid_format("<think>a</think><think>b</think><answer>B</answer>") == false);
        CHECK(has_valid_format("<think>a</think>text<answer>B</answer>") == false);
        CHECK(has_valid_format("<think>a<answer>B</answer></think>") == false);  // interleaved
        CHECK(has_valid_format("<think>a</think><answer>B</answer> trailing") == false);
        CHECK(has_valid_format("") == false);
    }
}

TEST_CASE("compute_advantages pinned cases") {
    SUBCASE("[2, 0] normalizes to [1, -1]") {
        const auto a = compute_advantages({2, 0});
        REQUIRE(a.has_value());
        CHECK((*a)[0] == doctest::Approx(1.0));
        CHECK((*a)[1] == doctest::Approx(-1.0));
    }
    SUBCASE("[2, 1, 1, 0] normalizes to [sqrt 2, 0, 0, -sqrt 2]") {
        const auto a = compute_advantages({2, 1, 1, 0});
        REQUIRE(a.has_value());
        const double root2 = std::sqrt(2.0);
        CHECK((*a)[0] == doctest::Approx(root2));
        CHECK((*a)[1] == doctest::Approx(0.0));
        CHECK((*a)[2] == doctest::Approx(0.0));
        CHECK((*a)[3] == doctest::Approx(-root2));
        double mean = 0, sq = 0;
        for (double v : *a) mean += v;
        mean /= 4;
        for (double v : *a) sq += (v - mean) * (v - mean);
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(std::sqrt(sq / 4) - 1.0) <= 1e-9);
    }
    SUBCASE("an all-equal group is the degenerate signal") {
        CHECK(!compute_advantages({1, 1, 1}).has_value());
        CHECK(!compute_advantages({0, 0}).has_value());
    }
    SUBCASE("groups below size two violate the precondition") {
        CHECK_THROWS_AS(compute_advantages({1}), std::invalid_argument);
    }
}

TEST_CASE("grpo_loss") {
    SUBCASE("all-ones ratios with normalized advantages give zero loss") {
        Rng rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            const size_t g = 2 + rng.bounded(15);
            std::vector<double> rewards;
            for (size_t i = 0; i < g; ++i) rewards.push_back(static_cast<double>(rng.bounded(3)));
            const auto advantages = compute_advantages(rewards);
            if (!advantages) continue;
            std::vector<std::vector<double>> ratios(g);
            for (auto& row : ratios) row.assign(1 + rng.bounded(6), 1.0);
            const double loss =
                grpo_loss(ratios, *advantages, ClipConfig{0.2, static_cast<int>(g)});
            CHECK(std::abs(loss) <= 1e-12);
        }
    }

    SUBCASE("worked clipping example at G = 2") {
        // min(1.5*1, 1.2*1) + min(0.5*-1, 0.8*-1) = 1.2 - 0.8; loss = -0.2
        const double loss = grpo_loss({{1.5}, {0.5}}, {1.0, -1.0}, ClipConfig{0.2, 2});
        CHECK(loss == doctest::Approx(-0.2));
    }

    SUBCASE("negative advantage keeps the unclipped branch above the ceiling") {
        // min(1.5*-1, 1.2*-1) = -1.5 for the first term, 1.0 for the second;
        // loss = -(1/2)(-1.5 + 1.0) = 0.25
        const double loss = grpo_loss({{1.5}, {1.0}}, {-1.0, 1.0}, ClipConfig{0.2, 2});
        CHECK(loss == doctest::Approx(0.25));
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(grpo_loss({{1.0}}, {1.0}, ClipConfig{0.2, 1}), std::invalid_argument);
        CHECK_THROWS_AS(grpo_loss({{1.0}, {0.0}}, {1.0, -1.0}, ClipConfig{0.2, 2}),
                        std::invalid_argument);  // ratio <= 0
        CHECK_THROWS_AS(grpo_loss({{1.0}, {}}, {1.0, -1.0}, ClipConfig{0.2, 2}),
                        std::invalid_argument);  // empty response
        CHECK_THROWS_AS(grpo_loss({{1.0}, {1.0}}, {1.0, -1.0}, ClipConfig{1.5, 2}),
                        std::invalid_argument);  // epsilon out of range
        CHECK_THROWS_AS(grpo_loss({{1.0}}, {1.0, -1.0}, ClipConfig{0.2, 2}),
                        std::invalid_argument);  // G mismatch
    }
}

TEST_CASE("the optional KL penalty") {
    const std::vector<std::vector<double>> ratios = {{1.5}, {0.5}};
    const std::vector<double> advantages = {1.0, -1.0};
    const ClipConfig cfg{0.2, 2};
    const double base = grpo_loss(ratios, advantages, cfg);

    SUBCASE("weight zero reduces to the plain loss") {
        CHECK(grpo_loss_with_kl(ratios, advantages, cfg, {{2.0}, {0.5}}, 0.0) ==
              doctest::Approx(base));
    }
    SUBCASE("reference ratios of one add nothing") {
        CHECK(grpo_loss_with_kl(ratios, advantages, cfg, {{1.0}, {1.0}}, 0.5) ==
              doctest::Approx(base));
    }
    SUBCASE("the penalty is nonnegative") {
        const double with_kl = grpo_loss_with_kl(ratios, advantages, cfg, {{2.0}, {0.5}}, 0.5);
        CHECK(with_kl >= base);
    }
}

TEST_CASE("orf_filter") {
    auto group_with = [](std::vector<int> totals) {
        RolloutGroup g;
        for (int t : totals) {
            RewardBreakdown r;
            r.fmt = t > 0 ? 1 : 0;
            r.acc = t > 1 ? 1 : 0;
            g.responses.push_back("r");
            g.rewards.push_back(r);
        }
        g.refresh_stats();
        return g;
    };
    CHECK(!orf_filter(group_with({2, 2, 2, 2})));
    CHECK(!orf_filter(group_with({0, 0, 0, 0})));
    CHECK(orf_filter(group_with({2, 2, 1, 2})));
}

TEST_CASE("a kept group never yields the degenerate signal") {
    Rng rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        const size_t g = 2 + rng.bounded(15);
        std::vector<double> totals;
        for (size_t i = 0; i < g; ++i) totals.push_back(static_cast<double>(rng.bounded(3)));
        if (!orf_keep(totals)) continue;
        CHECK(compute_advantages(totals).has_value());
    }
}

TEST_CASE("crft_filter") {
    SUBCASE("stage 1 boundary") {
        CHECK(!crft_filter(0.0, 1));
        CHECK(crft_filter(1.0 / 8.0, 1));  // one correct chain in a G=8 group
        CHECK(crft_filter(1.0, 1));
    }
    SUBCASE("later stages use a strict upper bound") {
        CHECK(!crft_filter(0.5, 2));
        CHECK(crft_filter(0.49, 2));
        CHECK(crft_filter(0.0, 2));
        CHECK(!crft_filter(1.0, 3));
    }
    SUBCASE("filters match their literal predicates on random values") {
        Rng rng(21);
        for (int i = 0; i < 2000; ++i) {
            double v = rng.uniform01();
            if (i % 100 == 0) v = 0.0;
            if (i % 100 == 1) v = 0.5;
            if (i % 100 == 2) v = 1.0;
            CHECK(crft_filter(v, 1) == (v > 0.0));
            const int stage = 2 + static_cast<int>(rng.bounded(3));
            CHECK(crft_filter(v, stage) == (v < 0.5));
        }
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(crft_filter(0.5, 0), std::invalid_argument);
        CHECK_THROWS_AS(crft_filter(1.5, 1), std::invalid_argument);
    }
}

TEST_CASE("RolloutGroup bookkeeping") {
    RolloutGroup g;
    g.question_id = "q";
    for (int acc : {1, 0, 1, 1}) {
        RewardBreakdown r;
        r.fmt = 1;
        r.acc = acc;
        g.responses.push_back("r");
        g.rewards.push_back(r);
    }
    g.refresh_stats();
    CHECK(g.avg_acc == doctest::Approx(0.75));
    CHECK(g.total_rewards() == std::vector<double>{2, 1, 2, 2});
}
