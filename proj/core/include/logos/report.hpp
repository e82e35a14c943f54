#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logos/dataset.hpp"
#include "logos/factuality.hpp"
#include "logos/judge.hpp"
#include "logos/lhs.hpp"

namespace logos {

// ============================================================================
// Configuration
// ============================================================================

struct EvalConfig {
    GatewayConfig gateway;
    double default_rel_tolerance = AnswerKey::kDefaultRelTolerance;
    int n_references = 3;  // N (reference chains per question)
    uint64_t seed = 7;
    std::string hints_dir;

    // M = number of scorer judges
    size_t m_judges() const { return gateway.roles.scorers.size(); }
};

// JSON config file (see the config reference in the README).
EvalConfig load_eval_config(const std::string& path);
std::string eval_config_to_json(const EvalConfig& config);

// Canonical digest of every knob that can change report content.
std::string config_fingerprint(const EvalConfig& config);

// ============================================================================
// Reports
// ============================================================================

struct PerQuestionEval {
    std::string question_id;
    Topic topic = Topic::algebra;
    bool answer_correct = false;
    std::optional<FactualityScore> step_score;
    std::optional<FactualityScore> claim_score;
    std::set<HallucinationType> detected_types;
    bool types_evaluated = false;
    std::optional<double> lhs_s_bar;
    std::optional<std::array<double, 5>> lhs_per_dimension;
    bool incomplete = false;
    std::vector<std::string> notes;
};

struct EvalReport {
    // Overall tier values (fractions in [0, 1]).
    double accuracy = 0.0;
    double f_step = 0.0;
    double f_claim = 0.0;
    double lhs_mean = 0.0;
    double lhs_std = 0.0;
    std::array<double, 5> per_dimension_lhs{};
    std::map<Topic, double> per_topic_accuracy;
    // Type rates under both denominators (all questions; questions with at
    // least one detected type).
    std::map<HallucinationType, double> type_rate_per_question;
    std::map<HallucinationType, double> type_rate_per_detected;

    int n_questions = 0;
    int n_incomplete = 0;
    std::vector<std::string> incomplete_ids;

    // Config echo so every rendered artifact names its knobs.
    std::string fingerprint;
    double rel_tolerance = AnswerKey::kDefaultRelTolerance;
    int n_references = 3;
    int m_judges = 3;
    uint64_t seed = 7;
    std::vector<std::string> judge_names;

    std::vector<PerQuestionEval> rows;
};

// Runs all three metric tiers plus type detection over a dataset/response
// pair. Unresolvable question_ids raise std::runtime_error listing them;
// per-question judge failures mark the row incomplete instead of aborting.
EvalReport run_evaluate(const std::string& dataset_path, const std::string& responses_path,
                        const EvalConfig& config, JudgeGateway& gateway);

// LHS tier only (same incompleteness semantics).
EvalReport run_lhs_only(const std::string& dataset_path, const std::string& responses_path,
                        const EvalConfig& config, JudgeGateway& gateway);

// ============================================================================
// Metric correlation
// ============================================================================

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
    bool defined = false;  // false for zero-variance series
};

// Pearson r with the two-sided p-value from t = r sqrt((n-2) / (1 - r^2)).
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr std::array<const char*, 4> kMetricNames = {"accuracy", "f_step", "f_claim",
                                                            "lhs"};

struct CorrelationMatrix {
    std::array<std::array<PearsonResult, 4>, 4> cells{};
    size_t n = 0;  // number of reports (series length)
};

// Correlates the four overall metrics across reports. Requires >= 3 reports.
CorrelationMatrix metric_correlation(const std::vector<EvalReport>& reports);
CorrelationMatrix metric_correlation_series(const std::array<std::vector<double>, 4>& series);

std::string render_correlation(const CorrelationMatrix& matrix);

// ============================================================================
// Rendering
// ============================================================================

enum class ReportFormat { table_text, csv, json };

std::optional<ReportFormat> parse_report_format(std::string_view s);

// json and csv are lossless; table-text rounds to presentation precision
// (accuracy as a percentage with one decimal, LHS with four decimals).
std::string render_report(const EvalReport& report, ReportFormat format);

// Inverse of the json rendering.
EvalReport parse_report_json(const std::string& text);

}  // namespace logos
