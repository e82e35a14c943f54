#include "logos/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace logos {

using json = nlohmann::ordered_json;

std::string_view to_string(Topic t) {
    switch (t) {
        case Topic::algebra: return "algebra";
        case Topic::arithmetic: return "arithmetic";
        case Topic::geometry: return "geometry";
        case Topic::logical: return "logical";
        case Topic::scientific: return "scientific";
        case Topic::spatial: return "spatial";
        case Topic::statistical: return "statistical";
    }
    return "algebra";
}

std::optional<Topic> parse_topic(std::string_view s) {
    for (Topic t : kAllTopics) {
        if (s == to_string(t)) return t;
    }
    return std::nullopt;
}

std::string_view to_string(HallucinationType t) {
    switch (t) {
        case HallucinationType::spatial: return "spatial";
        case HallucinationType::logical: return "logical";
        case HallucinationType::factuality: return "factuality";
        case HallucinationType::context: return "context";
        case HallucinationType::fabrication: return "fabrication";
    }
    return "spatial";
}

std::optional<HallucinationType> parse_hallucination_type(std::string_view s) {
    for (HallucinationType t : kAllHallucinationTypes) {
        if (s == to_string(t)) return t;
    }
    return std::nullopt;
}

std::string_view describe(HallucinationType t) {
    switch (t) {
        case HallucinationType::spatial:
            return "errors when reasoning about spatial relationships, shapes, or "
                   "visual operations";
        case HallucinationType::logical:
            return "inconsistent or invalid reasoning even where the individual "
                   "facts are correct";
        case HallucinationType::factuality:
            return "incorrect claims about established knowledge or about facts "
                   "given in the input";
        case HallucinationType::context:
            return "intermediate reasoning that disagrees with the final prediction";
        case HallucinationType::fabrication:
            return "invented values, entities, or relationships present neither in "
                   "the input nor in the real world";
    }
    return "";
}

std::string_view to_string(AnswerKind k) {
    switch (k) {
        case AnswerKind::multiple_choice: return "multiple_choice";
        case AnswerKind::exact: return "exact";
        case AnswerKind::numeric: return "numeric";
    }
    return "exact";
}

AnswerKey AnswerKey::multiple_choice(char label) {
    AnswerKey k;
    k.kind = AnswerKind::multiple_choice;
    k.option = label;
    return k;
}

AnswerKey AnswerKey::exact(std::string text) {
    AnswerKey k;
    k.kind = AnswerKind::exact;
    k.text = std::move(text);
    return k;
}

AnswerKey AnswerKey::numeric(double value, double rel_tolerance) {
    AnswerKey k;
    k.kind = AnswerKind::numeric;
    k.value = value;
    k.rel_tolerance = rel_tolerance;
    return k;
}

// ============================================================================
// Validation
// ============================================================================

std::vector<std::string> validate_record(const QuestionRecord& rec) {
    std::vector<std::string> violations;
    auto add = [&](std::string msg) { violations.push_back(std::move(msg)); };

    if (rec.id.empty()) add("id empty");
    if (rec.prompt.empty()) add("prompt empty");
    if (rec.gt_chain.empty()) add("gt_chain empty");

    auto check_bounds = [&](const std::vector<std::string>& items, const char* name) {
        if (items.empty()) {
            add(std::string(name) + " length 0 < 1");
        } else if (items.size() > kMaxIntermediates) {
            add(std::string(name) + " length " + std::to_string(items.size()) + " > " +
                std::to_string(kMaxIntermediates));
        }
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].empty()) add(std::string(name) + "[" + std::to_string(i) + "] empty");
        }
    };
    check_bounds(rec.gt_steps, "gt_steps");
    check_bounds(rec.gt_claims, "gt_claims");

    switch (rec.answer_key.kind) {
        case AnswerKind::multiple_choice:
            if (rec.answer_key.option < 'A' || rec.answer_key.option > 'E')
                add("multiple-choice option must be a single uppercase letter A-E");
            break;
        case AnswerKind::exact:
            if (rec.answer_key.text.empty()) add("exact answer text empty");
            break;
        case AnswerKind::numeric:
            if (!(rec.answer_key.rel_tolerance > 0.0 && rec.answer_key.rel_tolerance < 1.0))
                add("tolerance out of range (0, 1)");
            break;
    }
    return violations;
}

// ============================================================================
// JSON (de)serialization
// ============================================================================

namespace {

json answer_key_to_json(const AnswerKey& k) {
    json j;
    j["kind"] = std::string(to_string(k.kind));
    switch (k.kind) {
        case AnswerKind::multiple_choice:
            j["option"] = std::string(1, k.option);
            break;
        case AnswerKind::exact:
            j["value"] = k.text;
            break;
        case AnswerKind::numeric:
            j["value"] = k.value;
            j["rel_tolerance"] = k.rel_tolerance;
            break;
    }
    return j;
}

AnswerKey answer_key_from_json(const json& j, double default_rel_tolerance) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "multiple_choice") {
        const std::string opt = j.at("option").get<std::string>();
        if (opt.size() != 1) throw std::runtime_error("answer_key.option must be one letter");
        return AnswerKey::multiple_choice(opt[0]);
    }
    if (kind == "exact") {
        return AnswerKey::exact(j.at("value").get<std::string>());
    }
    if (kind == "numeric") {
        double tol = default_rel_tolerance;
        if (j.contains("rel_tolerance")) tol = j.at("rel_tolerance").get<double>();
        return AnswerKey::numeric(j.at("value").get<double>(), tol);
    }
    throw std::runtime_error("unknown answer_key.kind '" + kind + "'");
}

}  // namespace

std::string record_to_json_line(const QuestionRecord& rec) {
    json j;
    j["id"] = rec.id;
    j["topic"] = std::string(to_string(rec.topic));
    j["prompt"] = rec.prompt;
    if (rec.image_ref) j["image_ref"] = *rec.image_ref;
    j["answer_key"] = answer_key_to_json(rec.answer_key);
    j["gt_chain"] = rec.gt_chain;
    j["gt_steps"] = rec.gt_steps;
    j["gt_claims"] = rec.gt_claims;
    if (rec.image_description) j["image_description"] = *rec.image_description;
    if (rec.hints) j["hints"] = *rec.hints;
    return j.dump();
}

QuestionRecord record_from_json_line(const std::string& line, double default_rel_tolerance) {
    const json j = json::parse(line);
    QuestionRecord rec;
    rec.id = j.at("id").get<std::string>();
    const std::string topic = j.at("topic").get<std::string>();
    auto t = parse_topic(topic);
    if (!t) throw std::runtime_error("unknown topic '" + topic + "'");
    rec.topic = *t;
    rec.prompt = j.at("prompt").get<std::string>();
    if (j.contains("image_ref") && !j.at("image_ref").is_null())
        rec.image_ref = j.at("image_ref").get<std::string>();
    rec.answer_key = answer_key_from_json(j.at("answer_key"), default_rel_tolerance);
    rec.gt_chain = j.at("gt_chain").get<std::string>();
    rec.gt_steps = j.at("gt_steps").get<std::vector<std::string>>();
    rec.gt_claims = j.at("gt_claims").get<std::vector<std::string>>();
    if (j.contains("image_description") && !j.at("image_description").is_null())
        rec.image_description = j.at("image_description").get<std::string>();
    if (j.contains("hints") && !j.at("hints").is_null())
        rec.hints = j.at("hints").get<std::string>();
    return rec;
}

// ============================================================================
// File I/O
// ============================================================================

namespace {

std::vector<std::pair<int, std::string>> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<std::pair<int, std::string>> lines;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Skip blank lines so hand-edited files stay loadable.
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.emplace_back(lineno, line);
    }
    return lines;
}

}  // namespace

std::vector<QuestionRecord> load_dataset(const std::string& path,
                                         double default_rel_tolerance) {
    std::vector<QuestionRecord> records;
    std::unordered_map<std::string, int> first_seen;  // id -> line number
    for (const auto& [lineno, line] : read_lines(path)) {
        QuestionRecord rec;
        try {
            rec = record_from_json_line(line, default_rel_tolerance);
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto violations = validate_record(rec);
        if (!violations.empty()) {
            std::ostringstream msg;
            msg << "line " << lineno << ": " << violations.front();
            for (std::size_t i = 1; i < violations.size(); ++i) msg << "; " << violations[i];
            throw std::runtime_error(msg.str());
        }
        auto [it, inserted] = first_seen.emplace(rec.id, lineno);
        if (!inserted) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": duplicate id '" +
                                     rec.id + "' (first seen on line " +
                                     std::to_string(it->second) + ")");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void save_dataset(const std::string& path, const std::vector<QuestionRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& rec : records) out << record_to_json_line(rec) << '\n';
}

std::vector<ModelResponse> load_responses(const std::string& path) {
    std::vector<ModelResponse> responses;
    for (const auto& [lineno, line] : read_lines(path)) {
        try {
            const json j = json::parse(line);
            ModelResponse r;
            r.question_id = j.at("question_id").get<std::string>();
            r.raw_text = j.at("raw_text").get<std::string>();
            if (j.contains("pred_steps"))
                r.pred_steps = j.at("pred_steps").get<std::vector<std::string>>();
            if (j.contains("pred_claims"))
                r.pred_claims = j.at("pred_claims").get<std::vector<std::string>>();
            for (const auto* items : {&r.pred_steps, &r.pred_claims}) {
                if (*items && (*items)->size() > kMaxIntermediates)
                    throw std::runtime_error("pred list length " +
                                             std::to_string((*items)->size()) + " > " +
                                             std::to_string(kMaxIntermediates));
            }
            responses.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return responses;
}

void save_responses(const std::string& path, const std::vector<ModelResponse>& responses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& r : responses) {
        json j;
        j["question_id"] = r.question_id;
        j["raw_text"] = r.raw_text;
        if (r.pred_steps) j["pred_steps"] = *r.pred_steps;
        if (r.pred_claims) j["pred_claims"] = *r.pred_claims;
        out << j.dump() << '\n';
    }
}

}  // namespace logos
