#pragma once

#include <optional>
#include <string>

#include "logos/dataset.hpp"
#include "logos/judge.hpp"

namespace logos {

// A final answer located inside a response.
struct ParsedAnswer {
    AnswerKind kind = AnswerKind::exact;
    std::string text;                   // the matched span, trimmed
    std::optional<char> option;         // uppercase label when one is recognizable
    std::optional<double> number;       // numeric value when one is recognizable
    size_t span_begin = 0;              // character range within raw_text
    size_t span_end = 0;
};

// Locates the final answer. Prefers the last <answer>...</answer> block;
// otherwise falls back to, in order: an answer-cue option letter, the last
// number, the trailing clause. <think> blocks are never scanned during
// fallback. Returns nullopt when no candidate survives.
std::optional<ParsedAnswer> parse_final_answer(const ModelResponse& response);

// Deterministic, total matching rule per key kind:
//   multiple_choice  case-insensitive label equality
//   exact            normalized text equality (trim, collapse whitespace,
//                    strip terminal punctuation)
//   numeric          |pred - gt| / max(|gt|, 1e-12) <= rel_tolerance
// not-found always fails.
bool match_answer(const std::optional<ParsedAnswer>& parsed, const AnswerKey& key);

// Fraction of true entries. Throws std::invalid_argument on an empty list.
double dataset_accuracy(const std::vector<bool>& results);

// Guard for zero ground truth in the relative-error rule.
inline constexpr double kNumericDenominatorFloor = 1e-12;

// Normalization used by exact matching (exposed for reuse and tests).
std::string normalize_answer_text(std::string_view s);

// Classifies a free-standing answer string (no span information).
ParsedAnswer classify_answer_text(const std::string& text);

// Judge-backed parser for parity with judge-evaluated accuracy setups: asks
// the extractor-role judge for the final answer, then classifies the reply
// with the same rules as the local parser. The span points at the reply text
// inside raw_text when it occurs there verbatim.
std::optional<ParsedAnswer> judge_parse_final_answer(const ModelResponse& response,
                                                     JudgeGateway& gateway,
                                                     const std::string& judge_role_name);

}  // namespace logos
