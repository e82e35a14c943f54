#include "logos/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "logos/answer.hpp"

namespace logos {

namespace {

bool is_whitespace(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

// Exactly one occurrence of each tag, in nesting order.
struct TagSpan {
    size_t open_begin, body_begin, body_end, close_end;
};

std::optional<TagSpan> single_block(const std::string& text, const std::string& tag) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const size_t o = text.find(open);
    if (o == std::string::npos) return std::nullopt;
    if (text.find(open, o + 1) != std::string::npos) return std::nullopt;
    const size_t c = text.find(close, o + open.size());
    if (c == std::string::npos) return std::nullopt;
    if (text.find(close, c + 1) != std::string::npos) return std::nullopt;
    return TagSpan{o, o + open.size(), c, c + close.size()};
}

}  // namespace

bool has_valid_format(const std::string& text) {
    const auto think = single_block(text, "think");
    const auto answer = single_block(text, "answer");
    if (!think || !answer) return false;
    // think closes before answer opens; tags do not interleave
    if (think->close_end > answer->open_begin) return false;
    // the blocks themselves contain no stray block tags
    const std::string think_body = text.substr(think->body_begin, think->body_end - think->body_begin);
    const std::string answer_body =
        text.substr(answer->body_begin, answer->body_end - answer->body_begin);
    for (const char* tag : {"<think>", "</think>", "<answer>", "</answer>"}) {
        if (think_body.find(tag) != std::string::npos) return false;
        if (answer_body.find(tag) != std::string::npos) return false;
    }
    // nothing but whitespace outside the two blocks
    if (!is_whitespace(std::string_view(text).substr(0, think->open_begin))) return false;
    if (!is_whitespace(
            std::string_view(text).substr(think->close_end, answer->open_begin - think->close_end)))
        return false;
    if (!is_whitespace(std::string_view(text).substr(answer->close_end))) return false;
    return true;
}

RewardBreakdown compute_reward(const std::string& response_text, const AnswerKey& key) {
    RewardBreakdown reward;
    reward.fmt = has_valid_format(response_text) ? 1 : 0;
    // Accuracy is judged on the answer block alone; a response without a
    // complete block earns no accuracy reward.
    const size_t open = response_text.rfind("<answer>");
    if (open != std::string::npos &&
        response_text.find("</answer>", open + 8) != std::string::npos) {
        ModelResponse resp;
        resp.raw_text = response_text;
        const auto parsed = parse_final_answer(resp);
        reward.acc = match_answer(parsed, key) ? 1 : 0;
    }
    return reward;
}

std::vector<double> RolloutGroup::total_rewards() const {
    std::vector<double> totals;
    totals.reserve(rewards.size());
    for (const auto& r : rewards) totals.push_back(static_cast<double>(r.total()));
    return totals;
}

void RolloutGroup::refresh_stats() {
    if (rewards.empty()) {
        avg_acc = 0.0;
        return;
    }
    double sum = 0.0;
    for (const auto& r : rewards) sum += r.acc;
    avg_acc = sum / static_cast<double>(rewards.size());
}

std::optional<std::vector<double>> compute_advantages(const std::vector<double>& rewards,
                                                      double degenerate_guard) {
    if (rewards.size() < 2)
        throw std::invalid_argument("compute_advantages: group size must be >= 2");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double stddev = std::sqrt(var / n);
    if (stddev < degenerate_guard) return std::nullopt;
    std::vector<double> advantages;
    advantages.reserve(rewards.size());
    for (double r : rewards) advantages.push_back((r - mean) / stddev);
    return advantages;
}

bool orf_keep(const std::vector<double>& total_rewards) {
    if (total_rewards.empty()) return false;
    for (double r : total_rewards) {
        if (r != total_rewards.front()) return true;
    }
    return false;
}

bool orf_filter(const RolloutGroup& group) { return orf_keep(group.total_rewards()); }

bool crft_filter(double avg_acc, int stage) {
    if (stage < 1) throw std::invalid_argument("crft_filter: stage must be >= 1");
    if (avg_acc < 0.0 || avg_acc > 1.0)
        throw std::invalid_argument("crft_filter: avg_acc outside [0, 1]");
    return stage == 1 ? avg_acc > 0.0 : avg_acc < 0.5;
}

void ClipConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("ClipConfig: epsilon must be in (0, 1)");
    if (group_size < 2) throw std::invalid_argument("ClipConfig: group size must be >= 2");
}

double grpo_loss(const std::vector<std::vector<double>>& token_ratios,
                 const std::vector<double>& advantages, const ClipConfig& cfg) {
    cfg.validate();
    const size_t g = static_cast<size_t>(cfg.group_size);
    if (token_ratios.size() != g || advantages.size() != g)
        throw std::invalid_argument("grpo_loss: expected G = " + std::to_string(cfg.group_size) +
                                    " responses");
    double sum = 0.0;
    for (size_t i = 0; i < g; ++i) {
        const auto& ratios = token_ratios[i];
        if (ratios.empty()) throw std::invalid_argument("grpo_loss: empty response");
        const double a = advantages[i];
        double token_sum = 0.0;
        for (double r : ratios) {
            if (!(r > 0.0))
                throw std::invalid_argument(
                    "grpo_loss: ratio <= 0 (log-probability inconsistency upstream)");
            const double clipped = std::clamp(r, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
            token_sum += std::min(r * a, clipped * a);
        }
        sum += token_sum / static_cast<double>(ratios.size());
    }
    return -sum / static_cast<double>(g);
}

double grpo_loss_with_kl(const std::vector<std::vector<double>>& token_ratios,
                         const std::vector<double>& advantages, const ClipConfig& cfg,
                         const std::vector<std::vector<double>>& ref_ratios, double kl_weight) {
    double loss = grpo_loss(token_ratios, advantages, cfg);
    if (kl_weight == 0.0) return loss;
    if (ref_ratios.size() != token_ratios.size())
        throw std::invalid_argument("grpo_loss_with_kl: reference ratio shape mismatch");
    double penalty = 0.0;
    for (size_t i = 0; i < ref_ratios.size(); ++i) {
        if (ref_ratios[i].size() != token_ratios[i].size())
            throw std::invalid_argument("grpo_loss_with_kl: reference ratio shape mismatch");
        double token_sum = 0.0;
        for (double u : ref_ratios[i]) {
            if (!(u > 0.0)) throw std::invalid_argument("grpo_loss_with_kl: ratio <= 0");
            token_sum += u - std::log(u) - 1.0;
        }
        penalty += token_sum / static_cast<double>(ref_ratios[i].size());
    }
    return loss + kl_weight * penalty / static_cast<double>(ref_ratios.size());
}

}  // namespace logos
