#pragma once

#include <optional>
#include <string>
#include <vector>

#include "logos/dataset.hpp"

namespace logos {

// ============================================================================
// Rewards
// ============================================================================

// r_i = R_fmt + R_acc, both binary.
struct RewardBreakdown {
    int fmt = 0;
    int acc = 0;
    int total() const { return fmt + acc; }
};

// fmt = 1 iff the text is exactly one well-nested <think>...</think> block
// followed by one <answer>...</answer> block (whitespace around them is
// allowed, any other stray tag or text is not).
// acc = 1 iff the answer block content matches the key.
RewardBreakdown compute_reward(const std::string& response_text, const AnswerKey& key);

bool has_valid_format(const std::string& response_text);

// ============================================================================
// Groups and advantages
// ============================================================================

struct RolloutGroup {
    std::string question_id;
    std::vector<std::string> responses;       // length G
    std::vector<RewardBreakdown> rewards;     // length G
    std::optional<std::vector<double>> advantages;
    double avg_acc = 0.0;  // mean of the acc components

    size_t size() const { return responses.size(); }
    std::vector<double> total_rewards() const;
    // Fills avg_acc from rewards.
    void refresh_stats();
};

inline constexpr double kDegenerateStdGuard = 1e-8;

// A_i = (r_i - mean) / std with the population standard deviation.
// Returns nullopt (the degenerate-group signal) when std < guard; callers
// treat that as an ORF miss.
std::optional<std::vector<double>> compute_advantages(const std::vector<double>& rewards,
                                                      double degenerate_guard = kDegenerateStdGuard);

// Discards groups whose responses all share one total reward.
// true = keep, false = discard.
bool orf_filter(const RolloutGroup& group);
bool orf_keep(const std::vector<double>& total_rewards);

// Stage 1 keeps avg_acc > 0; stages >= 2 keep avg_acc < 0.5.
bool crft_filter(double avg_acc, int stage);

// ============================================================================
// Loss
// ============================================================================

struct ClipConfig {
    double epsilon = 0.2;  // clip range
    int group_size = 8;    // G

    void validate() const;
};

// Clipped surrogate objective without a KL term:
//   loss = -(1/G) sum_i (1/|r_i|) sum_t min(ratio * A_i,
//                                           clip(ratio, 1-eps, 1+eps) * A_i)
// token_ratios[i][t] is pi(token)/pi_old(token). Ratios must be positive.
double grpo_loss(const std::vector<std::vector<double>>& token_ratios,
                 const std::vector<double>& advantages, const ClipConfig& cfg);

// Variant with an optional KL penalty for ablations (default off everywhere).
// ref_ratios[i][t] is pi_ref(token)/pi(token); the penalty per token is the
// standard estimator ref_ratio - log(ref_ratio) - 1.
double grpo_loss_with_kl(const std::vector<std::vector<double>>& token_ratios,
                         const std::vector<double>& advantages, const ClipConfig& cfg,
                         const std::vector<std::vector<double>>& ref_ratios, double kl_weight);

}  // namespace logos
