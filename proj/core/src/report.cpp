#include "logos/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "logos/answer.hpp"

namespace logos {

using json = nlohmann::ordered_json;

// ============================================================================
// Configuration
// ============================================================================

namespace {

JudgeSpec judge_spec_from_json(const json& j) {
    JudgeSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.endpoint = j.value("endpoint", std::string());
    spec.model_id = j.value("model_id", std::string("mock-v1"));
    spec.max_in_flight = j.value("max_in_flight", 4);
    spec.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    if (j.contains("retry")) {
        spec.retry.max_attempts = j.at("retry").value("max_attempts", 3);
        spec.retry.backoff_base =
            std::chrono::milliseconds(j.at("retry").value("backoff_base_ms", 250));
    }
    spec.api_key_env = j.value("api_key_env", std::string());
    return spec;
}

json judge_spec_to_json(const JudgeSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["endpoint"] = spec.endpoint;
    j["model_id"] = spec.model_id;
    j["max_in_flight"] = spec.max_in_flight;
    j["timeout_ms"] = static_cast<int>(spec.timeout.count());
    j["retry"] = {{"max_attempts", spec.retry.max_attempts},
                  {"backoff_base_ms", static_cast<int>(spec.retry.backoff_base.count())}};
    j["api_key_env"] = spec.api_key_env;
    return j;
}

std::string full_precision(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string percent1(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

}  // namespace

EvalConfig load_eval_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config '" + path + "': " + e.what());
    }

    EvalConfig config;
    config.gateway.judges.clear();
    for (const auto& spec : j.at("judges")) config.gateway.judges.push_back(judge_spec_from_json(spec));
    config.gateway.templates_dir = j.value("templates_dir", std::string());
    config.gateway.cache_dir = j.value("cache_dir", std::string());
    if (j.contains("roles")) {
        const auto& roles = j.at("roles");
        auto& r = config.gateway.roles;
        r.extractor = roles.value("extractor", r.extractor);
        r.matcher = roles.value("matcher", r.matcher);
        r.detector = roles.value("detector", r.detector);
        r.rewriter = roles.value("rewriter", r.rewriter);
        r.classifier = roles.value("classifier", r.classifier);
        r.hinter = roles.value("hinter", r.hinter);
        r.verifier = roles.value("verifier", r.verifier);
        if (roles.contains("scorers"))
            r.scorers = roles.at("scorers").get<std::vector<std::string>>();
    }
    config.default_rel_tolerance = j.value("rel_tolerance", AnswerKey::kDefaultRelTolerance);
    config.n_references = j.value("n_references", 3);
    config.seed = j.value("seed", static_cast<uint64_t>(7));
    config.hints_dir = j.value("hints_dir", std::string());

    if (config.n_references < 1) throw std::runtime_error("config: n_references must be >= 1");
    if (config.gateway.roles.scorers.empty())
        throw std::runtime_error("config: roles.scorers must name at least one judge");
    return config;
}

std::string eval_config_to_json(const EvalConfig& config) {
    json j;
    j["judges"] = json::array();
    for (const auto& spec : config.gateway.judges) j["judges"].push_back(judge_spec_to_json(spec));
    j["templates_dir"] = config.gateway.templates_dir;
    j["cache_dir"] = config.gateway.cache_dir;
    const auto& r = config.gateway.roles;
    j["roles"] = {{"extractor", r.extractor}, {"matcher", r.matcher},   {"detector", r.detector},
                  {"rewriter", r.rewriter},   {"classifier", r.classifier}, {"hinter", r.hinter},
                  {"verifier", r.verifier},   {"scorers", r.scorers}};
    j["rel_tolerance"] = config.default_rel_tolerance;
    j["n_references"] = config.n_references;
    j["seed"] = config.seed;
    j["hints_dir"] = config.hints_dir;
    return j.dump(2) + "\n";
}

std::string config_fingerprint(const EvalConfig& config) {
    std::ostringstream material;
    material << "rel_tol=" << full_precision(config.default_rel_tolerance)
             << ";n_refs=" << config.n_references << ";seed=" << config.seed;
    const auto& r = config.gateway.roles;
    material << ";extractor=" << r.extractor << ";matcher=" << r.matcher
             << ";detector=" << r.detector << ";rewriter=" << r.rewriter;
    material << ";scorers=";
    for (const auto& s : r.scorers) material << s << ',';
    material << ";judges=";
    for (const auto& spec : config.gateway.judges)
        material << spec.name << ':' << spec.model_id << ',';
    return sha256_hex(material.str()).substr(0, 16);
}

// ============================================================================
// Evaluation
// ============================================================================

namespace {

// The chain an evaluation scores: the think block when present, otherwise
// the whole response text.
std::string extraction_chain(const std::string& raw_text) {
    const size_t open = raw_text.find("<think>");
    if (open != std::string::npos) {
        const size_t body = open + 7;
        const size_t close = raw_text.find("</think>", body);
        if (close != std::string::npos && close > body) {
            std::string inner = raw_text.substr(body, close - body);
            if (inner.find_first_not_of(" \t\r\n") != std::string::npos) return inner;
        }
    }
    return raw_text;
}

struct EvalContext {
    const EvalConfig& config;
    JudgeGateway& gateway;
    bool lhs_only = false;
};

PerQuestionEval evaluate_one(const QuestionRecord& record, const ModelResponse& response,
                             const ReferenceSet& refs, EvalContext& ctx) {
    PerQuestionEval row;
    row.question_id = record.id;
    row.topic = record.topic;

    // Tier 1: answer accuracy (deterministic local parser).
    const auto parsed = parse_final_answer(response);
    row.answer_correct = match_answer(parsed, record.answer_key);

    const std::string chain = extraction_chain(response.raw_text);
    const auto& roles = ctx.config.gateway.roles;

    // Tier 2: step/claim factuality plus type detection.
    if (!ctx.lhs_only) {
        try {
            std::vector<std::string> pred_steps, pred_claims;
            if (response.pred_steps && response.pred_claims) {
                pred_steps = *response.pred_steps;
                pred_claims = *response.pred_claims;
            } else {
                auto extracted = extract_intermediates(chain, ctx.gateway, roles.extractor);
                pred_steps = std::move(extracted.steps);
                pred_claims = std::move(extracted.claims);
                for (auto& w : extracted.warnings) row.notes.push_back(std::move(w));
            }
            const auto step_vectors =
                match_intermediates(pred_steps, record.gt_steps, ctx.gateway, roles.matcher);
            row.step_score = factuality_f1(step_vectors);
            const auto claim_vectors =
                match_intermediates(pred_claims, record.gt_claims, ctx.gateway, roles.matcher);
            row.claim_score = factuality_f1(claim_vectors);

            row.detected_types =
                detect_hallucination_types(pred_steps, pred_claims, record.gt_steps,
                                           record.gt_claims, ctx.gateway, roles.detector);
            row.types_evaluated = true;
        } catch (const std::exception& e) {
            row.incomplete = true;
            row.notes.push_back(std::string("factuality tier failed: ") + e.what());
        }
    }

    // Tier 3: LHS over the M x N grid.
    try {
        const auto lhs = score_lhs(chain, refs, ctx.gateway, roles.scorers);
        if (lhs.complete) {
            row.lhs_s_bar = lhs.s_bar;
            row.lhs_per_dimension = lhs.per_dimension_means;
        } else {
            row.incomplete = true;
            for (const auto& err : lhs.cell_errors)
                row.notes.push_back("lhs cell failed: " + err);
        }
    } catch (const std::exception& e) {
        row.incomplete = true;
        row.notes.push_back(std::string("lhs tier failed: ") + e.what());
    }
    return row;
}

EvalReport run_eval_impl(const std::string& dataset_path, const std::string& responses_path,
                         const EvalConfig& config, JudgeGateway& gateway, bool lhs_only) {
    const auto records = load_dataset(dataset_path, config.default_rel_tolerance);
    const auto responses = load_responses(responses_path);

    std::map<std::string, const QuestionRecord*> by_id;
    for (const auto& rec : records) by_id[rec.id] = &rec;

    std::vector<std::string> unresolved;
    for (const auto& resp : responses) {
        if (!by_id.count(resp.question_id)) unresolved.push_back(resp.question_id);
    }
    if (!unresolved.empty()) {
        std::ostringstream msg;
        msg << "responses reference unknown question ids:";
        for (const auto& id : unresolved) msg << " '" << id << "'";
        throw std::runtime_error(msg.str());
    }

    EvalContext ctx{config, gateway, lhs_only};
    EvalReport report;
    report.rel_tolerance = config.default_rel_tolerance;
    report.n_references = config.n_references;
    report.m_judges = static_cast<int>(config.m_judges());
    report.seed = config.seed;
    for (const auto& spec : config.gateway.judges) report.judge_names.push_back(spec.name);
    report.fingerprint = config_fingerprint(config);

    // Reference sets are cached per question (the gateway caches rewrites).
    struct RefsOrError {
        ReferenceSet refs;
        std::string error;  // nonempty: rewrites failed, degraded to N = 1
    };
    std::map<std::string, RefsOrError> refs_by_id;
    for (const auto& resp : responses) {
        const QuestionRecord& record = *by_id.at(resp.question_id);
        auto it = refs_by_id.find(record.id);
        if (it == refs_by_id.end()) {
            RefsOrError entry;
            try {
                entry.refs = build_references(record.gt_chain, config.n_references, gateway,
                                              config.gateway.roles.rewriter);
            } catch (const std::exception& e) {
                entry.refs.references = {record.gt_chain};
                entry.error = e.what();
            }
            it = refs_by_id.emplace(record.id, std::move(entry)).first;
        }
        auto row = evaluate_one(record, resp, it->second.refs, ctx);
        if (!it->second.error.empty()) {
            row.incomplete = true;
            row.notes.push_back("reference rewrites failed (scored against the ground-truth "
                                "chain only): " +
                                it->second.error);
        }
        report.rows.push_back(std::move(row));
    }

    // Aggregation.
    report.n_questions = static_cast<int>(report.rows.size());
    if (report.rows.empty()) throw std::runtime_error("no responses to evaluate");

    std::vector<bool> correct;
    std::map<Topic, std::pair<int, int>> topic_counts;  // correct, total
    double step_sum = 0.0, claim_sum = 0.0;
    int step_n = 0, claim_n = 0;
    std::vector<LhsResult> lhs_results;
    std::map<HallucinationType, int> type_counts;
    int detection_rows = 0, detected_rows = 0;

    for (const auto& row : report.rows) {
        correct.push_back(row.answer_correct);
        auto& tc = topic_counts[row.topic];
        tc.first += row.answer_correct ? 1 : 0;
        tc.second += 1;
        if (row.step_score) {
            step_sum += row.step_score->f1;
            ++step_n;
        }
        if (row.claim_score) {
            claim_sum += row.claim_score->f1;
            ++claim_n;
        }
        if (row.lhs_s_bar) {
            LhsResult r;
            r.complete = true;
            r.s_bar = *row.lhs_s_bar;
            r.per_dimension_means = *row.lhs_per_dimension;
            lhs_results.push_back(std::move(r));
        }
        if (row.types_evaluated) {
            ++detection_rows;
            if (!row.detected_types.empty()) ++detected_rows;
            for (auto t : row.detected_types) ++type_counts[t];
        }
        if (row.incomplete) {
            ++report.n_incomplete;
            report.incomplete_ids.push_back(row.question_id);
        }
    }

    report.accuracy = dataset_accuracy(correct);
    report.f_step = step_n > 0 ? step_sum / step_n : 0.0;
    report.f_claim = claim_n > 0 ? claim_sum / claim_n : 0.0;
    for (const auto& [topic, counts] : topic_counts)
        report.per_topic_accuracy[topic] =
            static_cast<double>(counts.first) / static_cast<double>(counts.second);
    if (!lhs_results.empty()) {
        const auto agg = aggregate_lhs(lhs_results);
        report.lhs_mean = agg.mean;
        report.lhs_std = agg.stddev;
        report.per_dimension_lhs = agg.per_dimension_means;
    }
    for (HallucinationType t : kAllHallucinationTypes) {
        const int count = type_counts.count(t) ? type_counts.at(t) : 0;
        report.type_rate_per_question[t] =
            detection_rows > 0 ? static_cast<double>(count) / detection_rows : 0.0;
        report.type_rate_per_detected[t] =
            detected_rows > 0 ? static_cast<double>(count) / detected_rows : 0.0;
    }
    return report;
}

}  // namespace

EvalReport run_evaluate(const std::string& dataset_path, const std::string& responses_path,
                        const EvalConfig& config, JudgeGateway& gateway) {
    return run_eval_impl(dataset_path, responses_path, config, gateway, false);
}

EvalReport run_lhs_only(const std::string& dataset_path, const std::string& responses_path,
                        const EvalConfig& config, JudgeGateway& gateway) {
    return run_eval_impl(dataset_path, responses_path, config, gateway, true);
}

// ============================================================================
// Correlation
// ============================================================================

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const size_t n = x.size();
    if (n < 3) throw std::invalid_argument("pearson: need at least 3 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        syy += (y[i] - mean_y) * (y[i] - mean_y);
    }

    PearsonResult result;
    if (sxx == 0.0 || syy == 0.0) return result;  // undefined-correlation marker
    result.defined = true;
    result.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

    const double df = static_cast<double>(n - 2);
    const double denom = 1.0 - result.r * result.r;
    if (denom <= 0.0) {
        result.p = 0.0;
        return result;
    }
    const double t = result.r * std::sqrt(df / denom);
    const boost::math::students_t dist(df);
    result.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return result;
}

CorrelationMatrix metric_correlation_series(const std::array<std::vector<double>, 4>& series) {
    CorrelationMatrix matrix;
    matrix.n = series[0].size();
    for (size_t i = 0; i < 4; ++i) {
        for (size_t j = 0; j < 4; ++j) {
            matrix.cells[i][j] = pearson(series[i], series[j]);
        }
    }
    return matrix;
}

CorrelationMatrix metric_correlation(const std::vector<EvalReport>& reports) {
    if (reports.size() < 3)
        throw std::invalid_argument("metric_correlation: need at least 3 reports");
    std::array<std::vector<double>, 4> series;
    for (const auto& r : reports) {
        series[0].push_back(r.accuracy);
        series[1].push_back(r.f_step);
        series[2].push_back(r.f_claim);
        series[3].push_back(r.lhs_mean);
    }
    return metric_correlation_series(series);
}

std::string render_correlation(const CorrelationMatrix& matrix) {
    std::ostringstream out;
    out << "Pearson correlation over " << matrix.n << " reports (r, two-sided p)\n";
    out << "metric     ";
    for (const char* name : kMetricNames) {
        char cell[32];
        std::snprintf(cell, sizeof(cell), " %18s", name);
        out << cell;
    }
    out << '\n';
    for (size_t i = 0; i < 4; ++i) {
        char head[32];
        std::snprintf(head, sizeof(head), "%-11s", kMetricNames[i]);
        out << head;
        for (size_t j = 0; j < 4; ++j) {
            const auto& cell = matrix.cells[i][j];
            char body[40];
            if (!cell.defined) {
                std::snprintf(body, sizeof(body), " %18s", "undefined");
            } else {
                std::snprintf(body, sizeof(body), "  %6.3f (p=%.1e)", cell.r, cell.p);
            }
            out << body;
        }
        out << '\n';
    }
    return out.str();
}

// ============================================================================
// Rendering
// ============================================================================

std::optional<ReportFormat> parse_report_format(std::string_view s) {
    if (s == "table-text") return ReportFormat::table_text;
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    return std::nullopt;
}

namespace {

json report_to_json(const EvalReport& r) {
    json j;
    j["fingerprint"] = r.fingerprint;
    j["config"] = {{"rel_tolerance", r.rel_tolerance},
                   {"n_references", r.n_references},
                   {"m_judges", r.m_judges},
                   {"seed", r.seed},
                   {"judges", r.judge_names}};
    j["overall"] = {{"accuracy", r.accuracy},
                    {"f_step", r.f_step},
                    {"f_claim", r.f_claim},
                    {"lhs_mean", r.lhs_mean},
                    {"lhs_std", r.lhs_std}};
    j["per_dimension_lhs"] = r.per_dimension_lhs;
    json topics = json::object();
    for (const auto& [topic, acc] : r.per_topic_accuracy)
        topics[std::string(to_string(topic))] = acc;
    j["per_topic_accuracy"] = topics;
    json per_question = json::object(), per_detected = json::object();
    for (const auto& [type, rate] : r.type_rate_per_question)
        per_question[std::string(to_string(type))] = rate;
    for (const auto& [type, rate] : r.type_rate_per_detected)
        per_detected[std::string(to_string(type))] = rate;
    j["hallucination_type_rates"] = {{"per_question", per_question},
                                     {"per_detected", per_detected}};
    j["n_questions"] = r.n_questions;
    j["n_incomplete"] = r.n_incomplete;
    j["incomplete_ids"] = r.incomplete_ids;

    j["rows"] = json::array();
    for (const auto& row : r.rows) {
        json q;
        q["question_id"] = row.question_id;
        q["topic"] = std::string(to_string(row.topic));
        q["answer_correct"] = row.answer_correct;
        if (row.step_score)
            q["step"] = {{"precision", row.step_score->precision},
                         {"recall", row.step_score->recall},
                         {"f1", row.step_score->f1}};
        if (row.claim_score)
            q["claim"] = {{"precision", row.claim_score->precision},
                          {"recall", row.claim_score->recall},
                          {"f1", row.claim_score->f1}};
        if (row.types_evaluated) {
            json types = json::array();
            for (auto t : row.detected_types) types.push_back(std::string(to_string(t)));
            q["detected_types"] = types;
        }
        if (row.lhs_s_bar) {
            q["lhs_s_bar"] = *row.lhs_s_bar;
            q["lhs_per_dimension"] = *row.lhs_per_dimension;
        }
        q["incomplete"] = row.incomplete;
        if (!row.notes.empty()) q["notes"] = row.notes;
        j["rows"].push_back(std::move(q));
    }
    return j;
}

std::string render_table_text(const EvalReport& r) {
    std::ostringstream out;
    out << "== Evaluation report (fingerprint " << r.fingerprint << ")\n";
    out << "rel_tolerance " << r.rel_tolerance << " | N references " << r.n_references
        << " | M judges " << r.m_judges << " | seed " << r.seed << " | judges ";
    for (size_t i = 0; i < r.judge_names.size(); ++i) {
        if (i) out << ',';
        out << r.judge_names[i];
    }
    out << "\n\n";
    out << "Accuracy  F_step  F_claim  LHS\n";
    out << percent1(r.accuracy) << "      " << percent1(r.f_step) << "    "
        << percent1(r.f_claim) << "     " << format_lhs(r.lhs_mean, r.lhs_std) << "\n\n";

    out << "Per-topic accuracy:\n";
    for (Topic t : kAllTopics) {
        auto it = r.per_topic_accuracy.find(t);
        out << "  " << to_string(t) << ": "
            << (it == r.per_topic_accuracy.end() ? "-" : percent1(it->second)) << '\n';
    }
    out << "\nPer-dimension LHS:\n";
    for (size_t d = 0; d < 5; ++d) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "  %s: %.4f\n", kDimensionNames[d],
                      r.per_dimension_lhs[d]);
        out << buf;
    }
    out << "\nHallucination type rates (per question / per detected response):\n";
    for (HallucinationType t : kAllHallucinationTypes) {
        const double per_q =
            r.type_rate_per_question.count(t) ? r.type_rate_per_question.at(t) : 0.0;
        const double per_d =
            r.type_rate_per_detected.count(t) ? r.type_rate_per_detected.at(t) : 0.0;
        out << "  " << to_string(t) << ": " << percent1(per_q) << "% / " << percent1(per_d)
            << "%\n";
    }
    out << "\nQuestions: " << r.n_questions << ", incomplete: " << r.n_incomplete;
    if (!r.incomplete_ids.empty()) {
        out << " (";
        for (size_t i = 0; i < r.incomplete_ids.size(); ++i) {
            if (i) out << ", ";
            out << r.incomplete_ids[i];
        }
        out << ")";
    }
    out << '\n';
    return out.str();
}

std::string render_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "key,value\n";
    out << "fingerprint," << r.fingerprint << '\n';
    out << "rel_tolerance," << full_precision(r.rel_tolerance) << '\n';
    out << "n_references," << r.n_references << '\n';
    out << "m_judges," << r.m_judges << '\n';
    out << "seed," << r.seed << '\n';
    out << "accuracy," << full_precision(r.accuracy) << '\n';
    out << "f_step," << full_precision(r.f_step) << '\n';
    out << "f_claim," << full_precision(r.f_claim) << '\n';
    out << "lhs_mean," << full_precision(r.lhs_mean) << '\n';
    out << "lhs_std," << full_precision(r.lhs_std) << '\n';
    for (size_t d = 0; d < 5; ++d)
        out << "lhs_" << kDimensionNames[d] << ',' << full_precision(r.per_dimension_lhs[d])
            << '\n';
    for (const auto& [topic, acc] : r.per_topic_accuracy)
        out << "accuracy_" << to_string(topic) << ',' << full_precision(acc) << '\n';
    for (const auto& [type, rate] : r.type_rate_per_question)
        out << "type_per_question_" << to_string(type) << ',' << full_precision(rate) << '\n';
    for (const auto& [type, rate] : r.type_rate_per_detected)
        out << "type_per_detected_" << to_string(type) << ',' << full_precision(rate) << '\n';
    out << "n_questions," << r.n_questions << '\n';
    out << "n_incomplete," << r.n_incomplete << '\n';
    return out.str();
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return report_to_json(report).dump(2) + "\n";
        case ReportFormat::csv: return render_csv(report);
        case ReportFormat::table_text: return render_table_text(report);
    }
    return {};
}

EvalReport parse_report_json(const std::string& text) {
    const json j = json::parse(text);
    EvalReport r;
    r.fingerprint = j.at("fingerprint").get<std::string>();
    const auto& cfg = j.at("config");
    r.rel_tolerance = cfg.at("rel_tolerance").get<double>();
    r.n_references = cfg.at("n_references").get<int>();
    r.m_judges = cfg.at("m_judges").get<int>();
    r.seed = cfg.at("seed").get<uint64_t>();
    r.judge_names = cfg.at("judges").get<std::vector<std::string>>();
    const auto& overall = j.at("overall");
    r.accuracy = overall.at("accuracy").get<double>();
    r.f_step = overall.at("f_step").get<double>();
    r.f_claim = overall.at("f_claim").get<double>();
    r.lhs_mean = overall.at("lhs_mean").get<double>();
    r.lhs_std = overall.at("lhs_std").get<double>();
    const auto dims = j.at("per_dimension_lhs").get<std::vector<double>>();
    for (size_t d = 0; d < 5 && d < dims.size(); ++d) r.per_dimension_lhs[d] = dims[d];
    for (const auto& [name, value] : j.at("per_topic_accuracy").items()) {
        auto t = parse_topic(name);
        if (!t) throw std::runtime_error("report: unknown topic '" + name + "'");
        r.per_topic_accuracy[*t] = value.get<double>();
    }
    const auto& type_rates = j.at("hallucination_type_rates");
    for (const auto& [name, value] : type_rates.at("per_question").items()) {
        auto t = parse_hallucination_type(name);
        if (!t) throw std::runtime_error("report: unknown hallucination type '" + name + "'");
        r.type_rate_per_question[*t] = value.get<double>();
    }
    for (const auto& [name, value] : type_rates.at("per_detected").items()) {
        auto t = parse_hallucination_type(name);
        if (!t) throw std::runtime_error("report: unknown hallucination type '" + name + "'");
        r.type_rate_per_detected[*t] = value.get<double>();
    }
    r.n_questions = j.at("n_questions").get<int>();
    r.n_incomplete = j.at("n_incomplete").get<int>();
    r.incomplete_ids = j.at("incomplete_ids").get<std::vector<std::string>>();

    for (const auto& q : j.at("rows")) {
        PerQuestionEval row;
        row.question_id = q.at("question_id").get<std::string>();
        auto t = parse_topic(q.at("topic").get<std::string>());
        if (!t) throw std::runtime_error("report: unknown topic in row");
        row.topic = *t;
        row.answer_correct = q.at("answer_correct").get<bool>();
        auto parse_score = [&](const char* key) -> std::optional<FactualityScore> {
            if (!q.contains(key)) return std::nullopt;
            FactualityScore s;
            s.precision = q.at(key).at("precision").get<double>();
            s.recall = q.at(key).at("recall").get<double>();
            s.f1 = q.at(key).at("f1").get<double>();
            return s;
        };
        row.step_score = parse_score("step");
        row.claim_score = parse_score("claim");
        if (q.contains("detected_types")) {
            row.types_evaluated = true;
            for (const auto& name : q.at("detected_types")) {
                auto ht = parse_hallucination_type(name.get<std::string>());
                if (!ht) throw std::runtime_error("report: unknown type in row");
                row.detected_types.insert(*ht);
            }
        }
        if (q.contains("lhs_s_bar")) {
            row.lhs_s_bar = q.at("lhs_s_bar").get<double>();
            const auto row_dims = q.at("lhs_per_dimension").get<std::vector<double>>();
            std::array<double, 5> arr{};
            for (size_t d = 0; d < 5 && d < row_dims.size(); ++d) arr[d] = row_dims[d];
            row.lhs_per_dimension = arr;
        }
        row.incomplete = q.at("incomplete").get<bool>();
        if (q.contains("notes")) row.notes = q.at("notes").get<std::vector<std::string>>();
        r.rows.push_back(std::move(row));
    }
    return r;
}

}  // namespace logos
