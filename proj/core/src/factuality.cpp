#include "logos/factuality.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace logos {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// "3. text" or "3) text" -> text
std::optional<std::string> strip_enumeration(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size()) return std::nullopt;
    if (line[i] != '.' && line[i] != ')') return std::nullopt;
    return trim(line.substr(i + 1));
}

}  // namespace

std::string enumerate_items(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out << '\n';
        out << (i + 1) << ". " << items[i];
    }
    return out.str();
}

bool parse_enumerated_reply(const std::string& raw, std::vector<std::string>& steps,
                            std::vector<std::string>& claims) {
    steps.clear();
    claims.clear();
    enum class Section { none, steps, claims };
    Section section = Section::none;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::string lowered = t;
        for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (lowered.rfind("steps:", 0) == 0) {
            section = Section::steps;
            continue;
        }
        if (lowered.rfind("claims:", 0) == 0) {
            section = Section::claims;
            continue;
        }
        auto item = strip_enumeration(t);
        if (!item || item->empty()) continue;
        if (section == Section::steps) steps.push_back(*item);
        if (section == Section::claims) claims.push_back(*item);
    }
    return !steps.empty() && !claims.empty();
}

ExtractedIntermediates extract_intermediates(const std::string& chain, JudgeGateway& gateway,
                                             const std::string& judge_role_name) {
    if (trim(chain).empty()) throw std::invalid_argument("chain empty");

    JudgeRequest req;
    req.template_id = "extractor";
    req.variables = {{"chain", chain}};
    req.judge = judge_role_name;
    req.decode = DecodeKind::free_text;

    ExtractedIntermediates out;
    std::string raw;
    // Parse failures are not cached, so the second invoke is a fresh call.
    for (int attempt = 0; attempt < 2; ++attempt) {
        raw = gateway.invoke(req).raw_text;
        if (parse_enumerated_reply(raw, out.steps, out.claims)) break;
        if (attempt == 1)
            throw std::runtime_error("extraction failed: judge reply not enumerable: " +
                                     raw.substr(0, 200));
    }

    auto clamp = [&](std::vector<std::string>& items, const char* name) {
        if (items.size() > kMaxIntermediates) {
            out.warnings.push_back(std::string(name) + " count " + std::to_string(items.size()) +
                                   " clamped to " + std::to_string(kMaxIntermediates));
            items.resize(kMaxIntermediates);
        }
    };
    clamp(out.steps, "steps");
    clamp(out.claims, "claims");
    return out;
}

MatchVectors match_intermediates(const std::vector<std::string>& pred,
                                 const std::vector<std::string>& gt, JudgeGateway& gateway,
                                 const std::string& judge_role_name) {
    if (pred.empty() || pred.size() > kMaxIntermediates)
        throw std::invalid_argument("predicted item count outside 1..10");
    if (gt.empty() || gt.size() > kMaxIntermediates)
        throw std::invalid_argument("ground-truth item count outside 1..10");

    JudgeRequest req;
    req.template_id = "matcher";
    req.variables = {
        {"n_pred", std::to_string(pred.size())},
        {"n_gt", std::to_string(gt.size())},
        {"pred_items", enumerate_items(pred)},
        {"gt_items", enumerate_items(gt)},
    };
    req.judge = judge_role_name;
    req.decode = DecodeKind::matching_vectors;

    const JudgeVerdict verdict = gateway.invoke(req);
    const auto& mv = std::get<MatchingVectors>(verdict.decoded);
    if (mv.pred.size() != pred.size() || mv.gt.size() != gt.size()) {
        throw ParseError("matching vector lengths (" + std::to_string(mv.pred.size()) + ", " +
                             std::to_string(mv.gt.size()) + ") do not fit item counts (" +
                             std::to_string(pred.size()) + ", " + std::to_string(gt.size()) + ")",
                         verdict.raw_text);
    }
    return MatchVectors{mv.pred, mv.gt};
}

FactualityScore factuality_f1(const MatchVectors& v) {
    if (v.m_pred.empty() || v.m_gt.empty())
        throw std::invalid_argument("factuality_f1: empty match vector");
    size_t pred_hits = 0, gt_hits = 0;
    for (int b : v.m_pred) pred_hits += b != 0 ? 1 : 0;
    for (int b : v.m_gt) gt_hits += b != 0 ? 1 : 0;
    FactualityScore score;
    score.precision = static_cast<double>(pred_hits) / static_cast<double>(v.m_pred.size());
    score.recall = static_cast<double>(gt_hits) / static_cast<double>(v.m_gt.size());
    const double sum = score.precision + score.recall;
    score.f1 = sum == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / sum;
    return score;
}

std::set<HallucinationType> detect_hallucination_types(
    const std::vector<std::string>& pred_steps, const std::vector<std::string>& pred_claims,
    const std::vector<std::string>& gt_steps, const std::vector<std::string>& gt_claims,
    JudgeGateway& gateway, const std::string& judge_role_name) {
    JudgeRequest req;
    req.template_id = "detector";
    req.variables = {
        {"pred_steps", enumerate_items(pred_steps)},
        {"pred_claims", enumerate_items(pred_claims)},
        {"gt_steps", enumerate_items(gt_steps)},
        {"gt_claims", enumerate_items(gt_claims)},
    };
    req.judge = judge_role_name;
    req.decode = DecodeKind::type_flags;

    const JudgeVerdict verdict = gateway.invoke(req);
    return std::get<TypeFlags>(verdict.decoded).types;
}

}  // namespace logos
