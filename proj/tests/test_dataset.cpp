#include <doctest.h>

#include <stdexcept>

#include <fstream>
#include <map>

#include "logos/dataset.hpp"
#include "test_support.hpp"

using namespace logos;
using test_support::TempDir;

namespace {

QuestionRecord well_formed() {
    QuestionRecord rec;
    rec.id = "q-1";
    rec.topic = Topic::geometry;
    rec.prompt = "What is the area?";
    rec.answer_key = AnswerKey::numeric(12.5, 0.05);
    rec.gt_chain = "Halve the base times height. The area is 12.5.";
    rec.gt_steps = {"Halve the base times height"};
    rec.gt_claims = {"The area is 12.5"};
    return rec;
}

}  // namespace

TEST_CASE("topic taxonomy has exactly seven round-tripping variants") {
    CHECK(kAllTopics.size() == 7);
    for (Topic t : kAllTopics) {
        auto parsed = parse_topic(to_string(t));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == t);
    }
    CHECK(!parse_topic("chemistry").has_value());
}

TEST_CASE("hallucination taxonomy has exactly five described variants") {
    CHECK(kAllHallucinationTypes.size() == 5);
    for (HallucinationType t : kAllHallucinationTypes) {
        auto parsed = parse_hallucination_type(to_string(t));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == t);
        CHECK(!describe(t).empty());
    }
}

TEST_CASE("validate_record") {
    SUBCASE("well-formed record passes") { CHECK(validate_record(well_formed()).empty()); }

    SUBCASE("empty chain and zero claims are two violations") {
        auto rec = well_formed();
        rec.gt_chain.clear();
        rec.gt_claims.clear();
        CHECK(validate_record(rec).size() == 2);
    }

    SUBCASE("zero tolerance is out of range") {
        auto rec = well_formed();
        rec.answer_key = AnswerKey::numeric(12.5, 0.0);
        const auto violations = validate_record(rec);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].find("tolerance out of range") != std::string::npos);
    }

    SUBCASE("tolerance of one is out of range") {
        auto rec = well_formed();
        rec.answer_key = AnswerKey::numeric(12.5, 1.0);
        CHECK(validate_record(rec).size() == 1);
    }

    SUBCASE("multiple-choice label must be A-E") {
        auto rec = well_formed();
        rec.answer_key = AnswerKey::multiple_choice('F');
        CHECK(validate_record(rec).size() == 1);
        rec.answer_key = AnswerKey::multiple_choice('b');
        CHECK(validate_record(rec).size() == 1);
        rec.answer_key = AnswerKey::multiple_choice('E');
        CHECK(validate_record(rec).empty());
    }

    SUBCASE("eleven steps break the K bound") {
        auto rec = well_formed();
        rec.gt_steps.assign(11, "step");
        const auto violations = validate_record(rec);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0] == "gt_steps length 11 > 10");
    }
}

TEST_CASE("load_dataset") {
    TempDir dir;

    SUBCASE("valid records load in file order") {
        std::ofstream out(dir.file("ok.jsonl"));
        for (int i = 1; i <= 3; ++i) {
            auto rec = well_formed();
            rec.id = "q-" + std::to_string(i);
            out << record_to_json_line(rec) << '\n';
        }
        out.close();
        const auto records = load_dataset(dir.file("ok.jsonl"));
        REQUIRE(records.size() == 3);
        CHECK(records[0].id == "q-1");
        CHECK(records[2].id == "q-3");
    }

    SUBCASE("K bound violation names the line") {
        auto bad = well_formed();
        bad.id = "q-2";
        bad.gt_steps.assign(11, "s");
        std::ofstream out(dir.file("bad.jsonl"));
        out << record_to_json_line(well_formed()) << '\n' << record_to_json_line(bad) << '\n';
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(dir.file("bad.jsonl")),
                             "line 2: gt_steps length 11 > 10", std::runtime_error);
    }

    SUBCASE("duplicate ids name both lines") {
        std::ofstream out(dir.file("dup.jsonl"));
        out << record_to_json_line(well_formed()) << '\n'
            << record_to_json_line(well_formed()) << '\n';
        out.close();
        try {
            load_dataset(dir.file("dup.jsonl"));
            FAIL("expected duplicate-id error");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line 2") != std::string::npos);
            CHECK(msg.find("duplicate id 'q-1'") != std::string::npos);
            CHECK(msg.find("line 1") != std::string::npos);
        }
    }

    SUBCASE("malformed json names the line") {
        std::ofstream out(dir.file("mal.jsonl"));
        out << record_to_json_line(well_formed()) << '\n' << "{not json\n";
        out.close();
        try {
            load_dataset(dir.file("mal.jsonl"));
            FAIL("expected parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
}

TEST_CASE("bundled mini dataset has 21 records, three per topic") {
    const auto records = load_dataset(test_support::data_path("mini_dataset.jsonl"));
    REQUIRE(records.size() == 21);
    std::map<Topic, int> counts;
    for (const auto& rec : records) ++counts[rec.topic];
    REQUIRE(counts.size() == 7);
    for (const auto& [topic, count] : counts) CHECK(count == 3);
}

TEST_CASE("serialize/load round trip is structurally equal") {
    TempDir dir;
    const auto records = load_dataset(test_support::data_path("mini_dataset.jsonl"));
    save_dataset(dir.file("copy.jsonl"), records);
    const auto reloaded = load_dataset(dir.file("copy.jsonl"));
    REQUIRE(reloaded.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i)
        CHECK(record_to_json_line(reloaded[i]) == record_to_json_line(records[i]));
}

TEST_CASE("omitted rel_tolerance takes the configured default") {
    const std::string line =
        R"({"id":"n-1","topic":"arithmetic","prompt":"p","answer_key":{"kind":"numeric","value":3},)"
        R"("gt_chain":"c","gt_steps":["s"],"gt_claims":["c"]})";
    CHECK(record_from_json_line(line).answer_key.rel_tolerance == AnswerKey::kDefaultRelTolerance);
    CHECK(record_from_json_line(line, 0.1).answer_key.rel_tolerance == 0.1);

    // An explicit tolerance wins over the knob.
    const std::string explicit_line =
        R"({"id":"n-1","topic":"arithmetic","prompt":"p","answer_key":{"kind":"numeric","value":3,"rel_tolerance":0.02},)"
        R"("gt_chain":"c","gt_steps":["s"],"gt_claims":["c"]})";
    CHECK(record_from_json_line(explicit_line, 0.1).answer_key.rel_tolerance == 0.02);
}

TEST_CASE("responses round trip") {
    TempDir dir;
    std::vector<ModelResponse> responses(2);
    responses[0].question_id = "q-1";
    responses[0].raw_text = "<answer>B</answer>";
    responses[1].question_id = "q-2";
    responses[1].raw_text = "free text";
    responses[1].pred_steps = {{"a step"}};
    responses[1].pred_claims = {{"a claim"}};
    save_responses(dir.file("r.jsonl"), responses);
    const auto reloaded = load_responses(dir.file("r.jsonl"));
    REQUIRE(reloaded.size() == 2);
    CHECK(reloaded[0].raw_text == "<answer>B</answer>");
    REQUIRE(reloaded[1].pred_steps.has_value());
    CHECK(reloaded[1].pred_steps->at(0) == "a step");
}

TEST_CASE("response pred lists are bounded at load") {
    TempDir dir;
    std::ofstream out(dir.file("r.jsonl"));
    out << R"({"question_id":"q","raw_text":"t","pred_steps":["1","2","3","4","5","6","7","8","9","10","11"]})"
        << '\n';
    out.close();
    try {
        load_responses(dir.file("r.jsonl"));
        FAIL("expected bound violation");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("11 > 10") != std::string::npos);
    }
}
