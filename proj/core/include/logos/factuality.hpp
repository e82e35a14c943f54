#pragma once

#include <set>
#include <string>
#include <vector>

#include "logos/dataset.hpp"
#include "logos/judge.hpp"

namespace logos {

// Binary coverage vectors for one matched pair of item lists.
struct MatchVectors {
    std::vector<int> m_pred;  // over predicted items
    std::vector<int> m_gt;    // over ground-truth items
};

struct FactualityScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ExtractedIntermediates {
    std::vector<std::string> steps;
    std::vector<std::string> claims;
    std::vector<std::string> warnings;  // provenance, e.g. clamping events
};

// Extracts 1..10 steps and 1..10 claims from a reasoning chain via the
// extractor judge. Counts beyond the bound are clamped with a warning; a
// reply that stays unparseable after one retry raises std::runtime_error.
ExtractedIntermediates extract_intermediates(const std::string& chain, JudgeGateway& gateway,
                                             const std::string& judge_role_name);

// One judge call covering both lists jointly. Length mismatches between the
// reply vectors and the item lists raise ParseError.
MatchVectors match_intermediates(const std::vector<std::string>& pred,
                                 const std::vector<std::string>& gt, JudgeGateway& gateway,
                                 const std::string& judge_role_name);

// precision = |m_pred = 1| / |m_pred|, recall = |m_gt = 1| / |m_gt|,
// f1 = 2PR / (P + R), defined as 0 at P = R = 0.
// Throws std::invalid_argument on an empty vector.
FactualityScore factuality_f1(const MatchVectors& v);

// Detects which of the five hallucination types the prediction exhibits.
std::set<HallucinationType> detect_hallucination_types(
    const std::vector<std::string>& pred_steps, const std::vector<std::string>& pred_claims,
    const std::vector<std::string>& gt_steps, const std::vector<std::string>& gt_claims,
    JudgeGateway& gateway, const std::string& judge_role_name);

// Renders an item list as the numbered block used in judge prompts.
std::string enumerate_items(const std::vector<std::string>& items);

// Parses a "Steps: / Claims:" enumerated judge reply. Exposed for the
// extraction retry path and for fixture-driven tests.
bool parse_enumerated_reply(const std::string& raw, std::vector<std::string>& steps,
                            std::vector<std::string>& claims);

}  // namespace logos
