#include "logos/curation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "logos/rng.hpp"

namespace logos {

using json = nlohmann::ordered_json;

std::vector<std::string> validate_trace(const PerceptionTrace& trace) {
    std::vector<std::string> violations;
    if (trace.question_id.empty()) violations.push_back("question_id empty");
    if (trace.describers.empty()) violations.push_back("no describer entries");
    if (trace.solvers.empty()) violations.push_back("no solver entries");
    return violations;
}

std::vector<PerceptionTrace> load_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<PerceptionTrace> traces;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            PerceptionTrace t;
            t.question_id = j.at("question_id").get<std::string>();
            for (const auto& d : j.at("describers")) {
                DescriberEntry e;
                e.description = d.at("description").get<std::string>();
                if (d.contains("verified_accurate") && !d.at("verified_accurate").is_null())
                    e.verified_accurate = d.at("verified_accurate").get<bool>();
                t.describers.push_back(std::move(e));
            }
            for (const auto& s : j.at("solvers")) {
                t.solvers.push_back(SolverEntry{s.at("reasoning_correct").get<bool>()});
            }
            const auto violations = validate_trace(t);
            if (!violations.empty()) throw std::runtime_error(violations.front());
            traces.push_back(std::move(t));
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return traces;
}

void save_traces(const std::string& path, const std::vector<PerceptionTrace>& traces) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& t : traces) {
        json j;
        j["question_id"] = t.question_id;
        j["describers"] = json::array();
        for (const auto& d : t.describers) {
            json e = {{"description", d.description}};
            if (d.verified_accurate) e["verified_accurate"] = *d.verified_accurate;
            j["describers"].push_back(std::move(e));
        }
        j["solvers"] = json::array();
        for (const auto& s : t.solvers)
            j["solvers"].push_back({{"reasoning_correct", s.reasoning_correct}});
        out << j.dump() << '\n';
    }
}

void verify_traces(std::vector<PerceptionTrace>& traces,
                   const std::vector<QuestionRecord>& records, JudgeGateway& gateway,
                   const std::string& verifier_judge) {
    std::map<std::string, const QuestionRecord*> by_id;
    for (const auto& rec : records) by_id[rec.id] = &rec;
    for (auto& trace : traces) {
        auto it = by_id.find(trace.question_id);
        if (it == by_id.end())
            throw std::runtime_error("verify_traces: trace id '" + trace.question_id +
                                     "' not in dataset");
        const QuestionRecord& rec = *it->second;
        const std::string reference =
            rec.image_description ? *rec.image_description : rec.prompt;
        for (auto& entry : trace.describers) {
            if (entry.verified_accurate) continue;
            JudgeRequest req;
            req.template_id = "verifier";
            req.variables = {{"reference", reference}, {"candidate", entry.description}};
            req.judge = verifier_judge;
            req.decode = DecodeKind::free_text;
            const std::string raw = gateway.invoke(req).raw_text;
            std::string word;
            for (char c : raw) {
                if (std::isalpha(static_cast<unsigned char>(c)))
                    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
                else if (!word.empty())
                    break;
            }
            if (word == "accurate")
                entry.verified_accurate = true;
            else if (word == "inaccurate")
                entry.verified_accurate = false;
            else
                throw ParseError("verifier reply is neither accurate nor inaccurate", raw);
        }
    }
}

std::vector<std::string> difficulty_filter(const std::vector<PerceptionTrace>& traces,
                                           int min_describers_ok, int min_solver_errors) {
    if (min_describers_ok < 1 || min_solver_errors < 1)
        throw std::invalid_argument("difficulty_filter: thresholds must be >= 1");
    std::vector<std::string> kept;
    for (const auto& t : traces) {
        int ok = 0, wrong = 0;
        for (const auto& d : t.describers) {
            if (!d.verified_accurate)
                throw std::runtime_error("difficulty_filter: trace '" + t.question_id +
                                         "' has an unverified description (run verify_traces)");
            ok += *d.verified_accurate ? 1 : 0;
        }
        for (const auto& s : t.solvers) wrong += s.reasoning_correct ? 0 : 1;
        if (ok >= min_describers_ok && wrong >= min_solver_errors)
            kept.push_back(t.question_id);
    }
    return kept;
}

std::vector<std::string> balance_sample(const std::map<Topic, std::vector<std::string>>& by_topic,
                                        int target_per_topic, double max_imbalance,
                                        uint64_t seed) {
    if (target_per_topic < 1)
        throw std::invalid_argument("balance_sample: target_per_topic must be >= 1");
    if (max_imbalance < 1.0)
        throw std::invalid_argument("balance_sample: max_imbalance must be >= 1");
    for (const auto& [topic, ids] : by_topic) {
        if (ids.empty())
            throw std::runtime_error("balance_sample: topic '" + std::string(to_string(topic)) +
                                     "' has zero supply");
    }
    if (by_topic.empty()) throw std::invalid_argument("balance_sample: no topics");

    // Per-topic take: min(target, supply), then trim everything above
    // floor(min_count * max_imbalance) so the ratio constraint holds.
    std::map<Topic, size_t> counts;
    size_t min_count = SIZE_MAX;
    for (const auto& [topic, ids] : by_topic) {
        const size_t c = std::min<size_t>(target_per_topic, ids.size());
        counts[topic] = c;
        min_count = std::min(min_count, c);
    }
    const size_t cap =
        static_cast<size_t>(std::floor(static_cast<double>(min_count) * max_imbalance + 1e-9));
    for (auto& [topic, c] : counts) c = std::min(c, cap);

    // Partial Fisher-Yates over a sorted copy keeps the draw reproducible
    // regardless of input order.
    std::vector<std::string> sampled;
    for (const auto& [topic, ids] : by_topic) {
        std::vector<std::string> pool = ids;
        std::sort(pool.begin(), pool.end());
        Rng rng(mix64(seed, fnv1a64(to_string(topic))));
        const size_t take = counts.at(topic);
        for (size_t i = 0; i < take; ++i) {
            const size_t j = i + rng.bounded(pool.size() - i);
            std::swap(pool[i], pool[j]);
            sampled.push_back(pool[i]);
        }
    }
    return sampled;
}

}  // namespace logos
