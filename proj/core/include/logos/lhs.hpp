#pragma once

#include <optional>
#include <string>
#include <vector>

#include "logos/judge.hpp"

namespace logos {

// N reference chains: index 0 is the ground-truth chain verbatim, the rest
// are judge rewrites.
struct ReferenceSet {
    std::vector<std::string> references;

    size_t n() const { return references.size(); }
};

struct LhsResult {
    // M x N grid: per_judge_per_ref[j][i] is judge j scoring reference i.
    // A cell stays empty when that judge call failed after retries.
    std::vector<std::vector<std::optional<DimensionScores>>> per_judge_per_ref;
    std::vector<std::string> cell_errors;  // one message per failed cell
    bool complete = false;
    double s_bar = 0.0;                       // defined only when complete
    std::array<double, 5> per_dimension_means{};  // defined only when complete

    size_t judges() const { return per_judge_per_ref.size(); }
    size_t refs() const { return per_judge_per_ref.empty() ? 0 : per_judge_per_ref[0].size(); }
};

struct LhsAggregate {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::array<double, 5> per_dimension_means{};
    size_t count = 0;
};

// Builds the reference set: the ground-truth chain plus n-1 cached judge
// rewrites. n >= 1.
ReferenceSet build_references(const std::string& gt_chain, int n, JudgeGateway& gateway,
                              const std::string& rewriter_judge);

// Scores one response over every (judge, reference) pair with the scoring
// template. s_bar is the double mean: over judges of (over references of
// (mean of the five dimension scores)). Incomplete grids leave the result
// flagged instead of aborting the batch.
LhsResult score_lhs(const std::string& response, const ReferenceSet& refs,
                    JudgeGateway& gateway, const std::vector<std::string>& scorer_judges);

// Recomputes s_bar and the per-dimension means from a complete grid.
// Throws std::invalid_argument when any cell is missing.
void finalize_lhs(LhsResult& result);

// Mean and population standard deviation of the s_bar values, plus
// per-dimension means, over complete results only.
LhsAggregate aggregate_lhs(const std::vector<LhsResult>& results);

// "0.7517±0.0168" (four decimals).
std::string format_lhs(double mean, double stddev);

}  // namespace logos
