#include <doctest.h>

#include <stdexcept>

#include <fstream>
#include <set>

#include "logos/judge.hpp"
#include "test_support.hpp"

using namespace logos;
using test_support::scripted;
using test_support::single_mock_config;
using test_support::TempDir;

TEST_CASE("template rendering binds placeholders") {
    JudgeGateway gateway(single_mock_config());
    CHECK(gateway.render("echo", {{"x", "hi"}}) == "hi");
    CHECK_THROWS_AS(gateway.render("echo", {}), std::runtime_error);
    CHECK_THROWS_AS(gateway.render("no-such-template", {}), std::runtime_error);

    gateway.register_template("two", "{{a}}-{{b}}");
    CHECK(gateway.render("two", {{"a", "x"}, {"b", "y"}}) == "x-y");
    // Substituted values are not rescanned for placeholders.
    CHECK(gateway.render("two", {{"a", "{{b}}"}, {"b", "y"}}) == "{{b}}-y");
}

TEST_CASE("mock responses are pure functions of the rendered prompt") {
    CHECK(mock_response("prompt one", DecodeKind::free_text) ==
          mock_response("prompt one", DecodeKind::free_text));
    CHECK(mock_response("prompt one", DecodeKind::free_text) !=
          mock_response("prompt two", DecodeKind::free_text));
}

TEST_CASE("mock dimension scores decode to five values in [0,1]") {
    const auto raw = mock_response("score this", DecodeKind::dimension_scores);
    const auto scores = decode_dimension_scores(raw);
    for (double s : scores.s) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("mock matching vectors take their lengths from the prompt") {
    const auto raw = mock_response("There are 4 predicted items and 3 ground-truth items.",
                                   DecodeKind::matching_vectors);
    const auto mv = decode_matching_vectors(raw);
    CHECK(mv.pred == std::vector<int>{1, 1, 1, 1});
    CHECK(mv.gt == std::vector<int>{1, 1, 1});
}

TEST_CASE("mock class labels stay inside the taxonomy") {
    for (const char* prompt : {"alpha", "beta", "gamma"}) {
        const auto raw = mock_response(prompt, DecodeKind::class_label);
        CHECK(parse_topic(raw).has_value());
    }
}

TEST_CASE("cache idempotence within and across gateway instances") {
    TempDir dir;
    auto cfg = single_mock_config();
    cfg.cache_dir = dir.file("cache");

    JudgeRequest req;
    req.template_id = "echo";
    req.variables = {{"x", "hello"}};
    req.judge = "mock-a";
    req.decode = DecodeKind::free_text;

    JudgeGateway gateway(cfg);
    const auto first = gateway.invoke(req);
    CHECK(!first.cache_hit);
    CHECK(first.attempts == 1);
    const auto second = gateway.invoke(req);
    CHECK(second.cache_hit);
    CHECK(second.raw_text == first.raw_text);
    CHECK(std::get<std::string>(second.decoded) == std::get<std::string>(first.decoded));

    // A fresh gateway sees the persisted entry.
    JudgeGateway reopened(cfg);
    const auto third = reopened.invoke(req);
    CHECK(third.cache_hit);
    CHECK(third.raw_text == first.raw_text);
}

TEST_CASE("undecodable replies raise ParseError carrying the raw text") {
    auto cfg = single_mock_config();
    JudgeGateway gateway(cfg);
    // Prose with only four numbers cannot fill five dimensions.
    gateway.set_transport("mock-a",
                          test_support::fixed_reply("I would rate it 7, 6, 5 and 4 overall."));
    JudgeRequest req;
    req.template_id = "echo";
    req.variables = {{"x", "score request"}};
    req.judge = "mock-a";
    req.decode = DecodeKind::dimension_scores;
    try {
        gateway.invoke(req);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.raw_text == "I would rate it 7, 6, 5 and 4 overall.");
    }
    // Parse failures are not cached: a fixed transport now returning a valid
    // reply succeeds on the next invoke.
    gateway.set_transport("mock-a", test_support::fixed_reply(
                                        "factual: 7\nlogical: 6\ncompleteness: 5\n"
                                        "conceptual: 4\nstrategy: 10\n"));
    const auto verdict = gateway.invoke(req);
    const auto& scores = std::get<DimensionScores>(verdict.decoded);
    CHECK(scores.s[0] == doctest::Approx(0.7));
    CHECK(scores.s[4] == doctest::Approx(1.0));
}

TEST_CASE("retries back off and report the attempt count") {
    auto cfg = single_mock_config();
    cfg.judges[0].retry = RetryPolicy{3, std::chrono::milliseconds(1)};
    JudgeGateway gateway(cfg);

    int calls = 0;
    gateway.set_transport("mock-a", scripted([&calls](const JudgeSpec&, const std::string&,
                                                      DecodeKind) -> std::string {
                              if (++calls < 3) throw TransportError("flaky");
                              return "ok";
                          }));
    JudgeRequest req;
    req.template_id = "echo";
    req.variables = {{"x", "retry"}};
    req.judge = "mock-a";
    const auto verdict = gateway.invoke(req);
    CHECK(verdict.attempts == 3);
    CHECK(verdict.raw_text == "ok");

    // All attempts failing surfaces a transport error.
    gateway.set_transport("mock-a", scripted([](const JudgeSpec&, const std::string&,
                                                DecodeKind) -> std::string {
                              throw TransportError("down");
                          }));
    req.variables = {{"x", "never cached"}};
    CHECK_THROWS_AS(gateway.invoke(req), TransportError);
}

TEST_CASE("invoke_batch") {
    JudgeGateway gateway(single_mock_config());

    SUBCASE("empty batch") { CHECK(gateway.invoke_batch({}).empty()); }

    SUBCASE("per-item failures keep their positions") {
        gateway.set_transport("mock-a", scripted([](const JudgeSpec&, const std::string& prompt,
                                                    DecodeKind) -> std::string {
                                  if (prompt.find("fail") != std::string::npos)
                                      throw TransportError("injected");
                                  return "reply to " + prompt;
                              }));
        std::vector<JudgeRequest> reqs(10);
        for (int i = 0; i < 10; ++i) {
            reqs[i].template_id = "echo";
            const bool fail = i == 2 || i == 5 || i == 6;
            reqs[i].variables = {{"x", (fail ? "fail-" : "ok-") + std::to_string(i)}};
            reqs[i].judge = "mock-a";
        }
        const auto results = gateway.invoke_batch(reqs);
        REQUIRE(results.size() == 10);
        int failures = 0;
        for (int i = 0; i < 10; ++i) {
            const bool expect_fail = i == 2 || i == 5 || i == 6;
            CHECK(results[i].ok() == !expect_fail);
            if (expect_fail) {
                ++failures;
                CHECK(!results[i].error.empty());
            } else {
                CHECK(results[i].verdict->raw_text == "reply to ok-" + std::to_string(i));
            }
        }
        CHECK(failures == 3);
    }

    SUBCASE("per-judge concurrency stays within max_in_flight") {
        auto cfg = single_mock_config();
        cfg.judges[0].max_in_flight = 4;
        JudgeGateway bounded(cfg);
        auto counter = std::make_shared<test_support::CountingTransport>(
            std::make_shared<MockTransport>());
        bounded.set_transport("mock-a", counter);
        std::vector<JudgeRequest> reqs(50);
        for (int i = 0; i < 50; ++i) {
            reqs[i].template_id = "echo";
            reqs[i].variables = {{"x", "c" + std::to_string(i)}};
            reqs[i].judge = "mock-a";
        }
        const auto results = bounded.invoke_batch(reqs);
        for (const auto& r : results) CHECK(r.ok());
        CHECK(counter->calls() == 50);
        CHECK(counter->peak() <= 4);
    }
}

TEST_CASE("dimension score normalization") {
    // Integral replies follow the 0-10 prompt scale.
    const auto low = decode_dimension_scores("1 1 1 1 1");
    for (double s : low.s) CHECK(s == doctest::Approx(0.1));
    const auto mixed = decode_dimension_scores(
        "factual: 0\nlogical: 10\ncompleteness: 5\nconceptual: 1\nstrategy: 9\n");
    CHECK(mixed.s[0] == doctest::Approx(0.0));
    CHECK(mixed.s[1] == doctest::Approx(1.0));
    CHECK(mixed.s[3] == doctest::Approx(0.1));
    // Fractional replies are already normalized.
    const auto unit = decode_dimension_scores("0.2 0.4 0.6 0.8 0.5");
    CHECK(unit.s[0] == doctest::Approx(0.2));
    CHECK(unit.s[4] == doctest::Approx(0.5));
    // Out of range either way is an error.
    CHECK_THROWS_AS(decode_dimension_scores("11 0 0 0 0"), ParseError);
    CHECK_THROWS_AS(decode_dimension_scores("0.2 0.4 0.6 0.8 1.5"), ParseError);
}

TEST_CASE("type flag decoding") {
    const auto flags = decode_type_flags("Types: logical, fabrication\n");
    CHECK(flags.types ==
          std::set<HallucinationType>{HallucinationType::logical, HallucinationType::fabrication});
    CHECK(decode_type_flags("Types: none\n").types.empty());
    CHECK_THROWS_AS(decode_type_flags("Types: imaginary\n"), ParseError);
    CHECK_THROWS_AS(decode_type_flags("no verdict here\nat all\n"), ParseError);
}

TEST_CASE("class label decoding") {
    CHECK(decode_class_label("geometry") == Topic::geometry);
    CHECK(decode_class_label("  Statistical \n") == Topic::statistical);
    CHECK(decode_class_label("This is an algebra question.") == Topic::algebra);
    CHECK_THROWS_AS(decode_class_label("algebra or geometry"), ParseError);
    CHECK_THROWS_AS(decode_class_label("chemistry"), ParseError);
}

TEST_CASE("matching vector decoding accepts the fallback grammar") {
    const auto strict = decode_matching_vectors("PRED: 1 0 1\nGT: 0 1\n");
    CHECK(strict.pred == std::vector<int>{1, 0, 1});
    CHECK(strict.gt == std::vector<int>{0, 1});
    const auto fallback = decode_matching_vectors("here you go\n101\n01\n");
    CHECK(fallback.pred == std::vector<int>{1, 0, 1});
    CHECK(fallback.gt == std::vector<int>{0, 1});
    CHECK_THROWS_AS(decode_matching_vectors("PRED: yes\nGT: no\n"), ParseError);
}

TEST_CASE("distinct prompts get distinct cache keys") {
    TempDir dir;
    auto cfg = single_mock_config();
    cfg.cache_dir = dir.file("cache");
    JudgeGateway gateway(cfg);
    for (int i = 0; i < 20; ++i) {
        JudgeRequest req;
        req.template_id = "echo";
        req.variables = {{"x", "variant " + std::to_string(i)}};
        req.judge = "mock-a";
        gateway.invoke(req);
    }
    size_t entries = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir.file("cache"))) {
        if (entry.path().extension() == ".json") ++entries;
    }
    CHECK(entries == 20);
}

TEST_CASE("payload fences round trip") {
    const std::string prompt = "before\n" + fence_payload("the chain text") + "\nafter";
    const auto payload = extract_payload(prompt);
    REQUIRE(payload.has_value());
    CHECK(*payload == "the chain text");
    CHECK(!extract_payload(prompt, 1).has_value());
}

TEST_CASE("spec validation at construction") {
    auto cfg = single_mock_config();
    cfg.judges[0].max_in_flight = 0;
    CHECK_THROWS_AS(JudgeGateway{cfg}, std::invalid_argument);
    cfg = single_mock_config();
    cfg.judges[0].retry.max_attempts = 0;
    CHECK_THROWS_AS(JudgeGateway{cfg}, std::invalid_argument);
}

TEST_CASE("templates directory overrides builtins") {
    TempDir dir;
    std::filesystem::create_directories(dir.file("templates"));
    std::ofstream(dir.file("templates") + "/echo.txt") << "custom {{x}}";
    auto cfg = single_mock_config();
    cfg.templates_dir = dir.file("templates");
    JudgeGateway gateway(cfg);
    CHECK(gateway.render("echo", {{"x", "v"}}) == "custom v");
}
