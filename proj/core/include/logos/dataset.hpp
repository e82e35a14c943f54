#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logos {

// ============================================================================
// Taxonomies
// ============================================================================

enum class Topic {
    algebra,
    arithmetic,
    geometry,
    logical,
    scientific,
    spatial,
    statistical,
};

inline constexpr std::array<Topic, 7> kAllTopics = {
    Topic::algebra,   Topic::arithmetic, Topic::geometry,    Topic::logical,
    Topic::scientific, Topic::spatial,   Topic::statistical,
};

std::string_view to_string(Topic t);
std::optional<Topic> parse_topic(std::string_view s);

enum class HallucinationType {
    spatial,
    logical,
    factuality,
    context,
    fabrication,
};

inline constexpr std::array<HallucinationType, 5> kAllHallucinationTypes = {
    HallucinationType::spatial, HallucinationType::logical,
    HallucinationType::factuality, HallucinationType::context,
    HallucinationType::fabrication,
};

std::string_view to_string(HallucinationType t);
std::optional<HallucinationType> parse_hallucination_type(std::string_view s);
// One-line characterization of what each type covers.
std::string_view describe(HallucinationType t);

// ============================================================================
// Answer keys
// ============================================================================

enum class AnswerKind { multiple_choice, exact, numeric };

std::string_view to_string(AnswerKind k);

struct AnswerKey {
    AnswerKind kind = AnswerKind::exact;
    std::string text;          // exact: expected answer text
    char option = 'A';         // multiple_choice: expected label, A-E
    double value = 0.0;        // numeric: ground-truth value
    double rel_tolerance = kDefaultRelTolerance;  // numeric: accepted relative error

    static constexpr double kDefaultRelTolerance = 0.05;

    static AnswerKey multiple_choice(char label);
    static AnswerKey exact(std::string text);
    static AnswerKey numeric(double value, double rel_tolerance = kDefaultRelTolerance);
};

// ============================================================================
// Records
// ============================================================================

inline constexpr std::size_t kMaxIntermediates = 10;  // K_s and K_c upper bound

struct QuestionRecord {
    std::string id;
    Topic topic = Topic::algebra;
    std::string prompt;
    std::optional<std::string> image_ref;  // opaque path, never decoded
    AnswerKey answer_key;
    std::string gt_chain;
    std::vector<std::string> gt_steps;
    std::vector<std::string> gt_claims;
    std::optional<std::string> image_description;
    std::optional<std::string> hints;
};

struct ModelResponse {
    std::string question_id;
    std::string raw_text;
    std::optional<std::vector<std::string>> pred_steps;
    std::optional<std::vector<std::string>> pred_claims;
};

// Returns every violated invariant (empty means ok).
std::vector<std::string> validate_record(const QuestionRecord& rec);

// Line-delimited record file, one JSON object per line. Order preserved.
// Throws std::runtime_error naming the offending line on malformed input,
// invariant violations, or duplicate ids. Numeric keys that omit
// rel_tolerance take default_rel_tolerance (a config knob).
std::vector<QuestionRecord> load_dataset(
    const std::string& path, double default_rel_tolerance = AnswerKey::kDefaultRelTolerance);

// Inverse of load_dataset; load(save(x)) is structurally equal to x.
void save_dataset(const std::string& path, const std::vector<QuestionRecord>& records);

std::string record_to_json_line(const QuestionRecord& rec);
QuestionRecord record_from_json_line(
    const std::string& line, double default_rel_tolerance = AnswerKey::kDefaultRelTolerance);

// Response files share the line-delimited layout, keyed by question_id.
std::vector<ModelResponse> load_responses(const std::string& path);
void save_responses(const std::string& path, const std::vector<ModelResponse>& responses);

}  // namespace logos
