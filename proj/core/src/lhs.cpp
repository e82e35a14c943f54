#include "logos/lhs.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace logos {

ReferenceSet build_references(const std::string& gt_chain, int n, JudgeGateway& gateway,
                              const std::string& rewriter_judge) {
    if (n < 1) throw std::invalid_argument("build_references: n must be >= 1");
    ReferenceSet set;
    set.references.push_back(gt_chain);
    for (int variant = 1; variant < n; ++variant) {
        JudgeRequest req;
        req.template_id = "rewriter";
        req.variables = {{"chain", gt_chain}, {"variant", std::to_string(variant)}};
        req.judge = rewriter_judge;
        req.decode = DecodeKind::free_text;
        set.references.push_back(gateway.invoke(req).raw_text);
    }
    return set;
}

LhsResult score_lhs(const std::string& response, const ReferenceSet& refs,
                    JudgeGateway& gateway, const std::vector<std::string>& scorer_judges) {
    if (scorer_judges.empty()) throw std::invalid_argument("score_lhs: M must be >= 1");
    if (refs.references.empty()) throw std::invalid_argument("score_lhs: empty reference set");

    const size_t m = scorer_judges.size();
    const size_t n = refs.references.size();

    // One request per (judge, reference) cell, fanned out through the gateway.
    std::vector<JudgeRequest> reqs;
    reqs.reserve(m * n);
    for (size_t j = 0; j < m; ++j) {
        for (size_t i = 0; i < n; ++i) {
            JudgeRequest req;
            req.template_id = "scorer";
            req.variables = {{"reference", refs.references[i]}, {"response", response}};
            req.judge = scorer_judges[j];
            req.decode = DecodeKind::dimension_scores;
            reqs.push_back(std::move(req));
        }
    }
    const auto items = gateway.invoke_batch(reqs);

    LhsResult result;
    result.per_judge_per_ref.assign(m, std::vector<std::optional<DimensionScores>>(n));
    bool complete = true;
    for (size_t j = 0; j < m; ++j) {
        for (size_t i = 0; i < n; ++i) {
            const auto& item = items[j * n + i];
            if (item.ok()) {
                result.per_judge_per_ref[j][i] = std::get<DimensionScores>(item.verdict->decoded);
            } else {
                complete = false;
                result.cell_errors.push_back("judge " + scorer_judges[j] + ", reference " +
                                             std::to_string(i) + ": " + item.error);
            }
        }
    }
    if (complete) finalize_lhs(result);
    return result;
}

void finalize_lhs(LhsResult& result) {
    const size_t m = result.judges();
    const size_t n = result.refs();
    if (m == 0 || n == 0) throw std::invalid_argument("finalize_lhs: empty grid");

    double judge_sum = 0.0;
    std::array<double, 5> dim_sums{};
    for (size_t j = 0; j < m; ++j) {
        double ref_sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const auto& cell = result.per_judge_per_ref[j][i];
            if (!cell) throw std::invalid_argument("finalize_lhs: incomplete grid");
            ref_sum += cell->mean();
            for (size_t d = 0; d < 5; ++d) dim_sums[d] += cell->s[d];
        }
        judge_sum += ref_sum / static_cast<double>(n);
    }
    result.s_bar = judge_sum / static_cast<double>(m);
    for (size_t d = 0; d < 5; ++d)
        result.per_dimension_means[d] = dim_sums[d] / static_cast<double>(m * n);
    result.complete = true;
}

LhsAggregate aggregate_lhs(const std::vector<LhsResult>& results) {
    std::vector<const LhsResult*> complete;
    for (const auto& r : results) {
        if (r.complete) complete.push_back(&r);
    }
    if (complete.empty())
        throw std::invalid_argument("aggregate_lhs: no complete results");

    LhsAggregate agg;
    agg.count = complete.size();
    double sum = 0.0;
    std::array<double, 5> dim_sums{};
    for (const auto* r : complete) {
        sum += r->s_bar;
        for (size_t d = 0; d < 5; ++d) dim_sums[d] += r->per_dimension_means[d];
    }
    agg.mean = sum / static_cast<double>(agg.count);
    double sq = 0.0;
    for (const auto* r : complete) {
        const double delta = r->s_bar - agg.mean;
        sq += delta * delta;
    }
    agg.stddev = std::sqrt(sq / static_cast<double>(agg.count));
    for (size_t d = 0; d < 5; ++d)
        agg.per_dimension_means[d] = dim_sums[d] / static_cast<double>(agg.count);
    return agg;
}

std::string format_lhs(double mean, double stddev) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f±%.4f", mean, stddev);
    return buf;
}

}  // namespace logos
