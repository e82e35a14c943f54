#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "logos/grpo.hpp"
#include "logos/rng.hpp"

namespace logos::toy {

inline constexpr int kMaxVocab = 64;
inline constexpr size_t kMaxAnswerLen = 8;

// A synthetic question: the policy must emit answer_tokens exactly.
struct ToyTask {
    std::string id;
    std::vector<int> prompt_tokens;
    std::vector<int> answer_tokens;  // 1..8 tokens, values < vocab
    int tier = 1;                    // difficulty tier == answer length here
};

std::vector<std::string> validate_task(const ToyTask& task, int vocab);

// ============================================================================
// Tabular softmax policy
// ============================================================================

// Context-conditioned categorical policy with one logit row per decoding
// context. Absent rows behave as all-zero logits (uniform). Exact
// log-probabilities and analytic gradients; "snapshotting" the old policy is
// a plain value copy.
class ToyPolicy {
public:
    ToyPolicy() : ToyPolicy(2) {}
    explicit ToyPolicy(int vocab_size, double temperature = 1.0);

    int vocab_size() const { return vocab_; }
    double temperature() const { return temperature_; }

    std::vector<double> probs(uint64_t ctx) const;
    double log_prob(uint64_t ctx, int token) const;
    int sample_token(uint64_t ctx, Rng& rng) const;
    int argmax_token(uint64_t ctx) const;

    double logit(uint64_t ctx, int token) const;
    void add_to_logit(uint64_t ctx, int token, double delta);

    const std::map<uint64_t, std::vector<double>>& table() const { return table_; }
    size_t parameter_count() const { return table_.size() * static_cast<size_t>(vocab_); }

private:
    int vocab_;
    double temperature_;
    std::map<uint64_t, std::vector<double>> table_;
};

// Decoding context for position t: the task prompt plus the generated prefix.
uint64_t context_key(const std::vector<int>& prompt_tokens, const std::vector<int>& prefix);

// Rendering to the reward format.
std::string answer_text(const std::vector<int>& tokens);
std::string render_response_text(const ToyTask& task, const std::vector<int>& tokens);
AnswerKey task_answer_key(const ToyTask& task);

// ============================================================================
// Sampling
// ============================================================================

// A rollout group plus the token/context data the gradient needs.
struct SampledGroup {
    RolloutGroup group;
    std::vector<std::vector<int>> tokens;        // G x answer_len
    std::vector<std::vector<uint64_t>> contexts; // G x answer_len
};

// G autoregressive samples with rewards; deterministic in (task, policy, seed).
SampledGroup sample_group(const ToyTask& task, const ToyPolicy& policy, int g, uint64_t seed);

// ============================================================================
// Optimization
// ============================================================================

struct TrainConfig {
    int group_size = 8;         // G
    int epochs_per_stage = 10;
    int curriculum_rounds = 1;  // k: refinement stages after stage 1
    double step_size = 0.5;
    double step_decay = 0.99;   // per epoch
    double epsilon = 0.2;       // clip range
    uint64_t seed = 7;

    void validate() const;
};

// pi(token) / pi_old(token), per response per token.
std::vector<std::vector<double>> token_ratios(const SampledGroup& sampled,
                                              const ToyPolicy& old_policy,
                                              const ToyPolicy& current);

// Loss of the group under the current policy (requires advantages).
double group_loss(const SampledGroup& sampled, const ToyPolicy& old_policy,
                  const ToyPolicy& current, const ClipConfig& cfg);

// Analytic d loss / d theta for every (context, token) parameter the group
// touches.
std::map<std::pair<uint64_t, int>, double> group_gradient(const SampledGroup& sampled,
                                                          const ToyPolicy& old_policy,
                                                          const ToyPolicy& current,
                                                          const ClipConfig& cfg);

struct StepResult {
    ToyPolicy policy;
    double loss;
};

// One gradient step of the given size; throws on a non-finite gradient,
// naming the offending context.
StepResult policy_gradient_step(const SampledGroup& sampled, const ToyPolicy& old_policy,
                                const ToyPolicy& current, const ClipConfig& cfg,
                                double step_size);

// ============================================================================
// Curriculum loop
// ============================================================================

struct StageRecord {
    int stage = 0;
    int kept = 0;
    int discarded_by_filter = 0;
    // How many kept tasks were also in the stage-1 keep set (the alternative
    // filter-composition reading; stages always re-scan the full pool).
    int kept_also_in_stage1 = 0;
    // Pre-sampling pass over the full pool: (task id, avg_acc), plus the ids
    // the stage filter kept. Enables recounting the filter from the log.
    std::vector<std::pair<std::string, double>> presample;
    std::vector<std::string> kept_ids;
};

struct EpochRecord {
    int stage = 0;
    int epoch = 0;  // 1-based within the stage
    int kept = 0;
    int discarded_orf = 0;
    double mean_reward = 0.0;  // mean total reward over the epoch's groups
    double loss = 0.0;         // mean pre-step loss (0 by the ratio identity)
    double loss_after = 0.0;   // mean loss re-evaluated after each update
    double accuracy = 0.0;     // greedy-decode accuracy over all tasks
};

struct TrainLog {
    int task_count = 0;
    double initial_accuracy = 0.0;  // greedy accuracy of the untrained policy
    std::vector<StageRecord> stages;
    std::vector<EpochRecord> epochs;
    ToyPolicy final_policy;

    std::string to_jsonl() const;
};

// Stage 1 trains on tasks with avg_acc > 0 under a pre-sampling pass; each
// later stage re-samples the full pool and keeps avg_acc < 0.5. ORF discards
// are logged per epoch. Throws "curriculum exhausted at stage s" when a
// stage filter empties the task set.
TrainLog run_curriculum(const std::vector<ToyTask>& tasks, const TrainConfig& cfg);

// Fraction of tasks whose greedy decode equals the answer.
double greedy_accuracy(const std::vector<ToyTask>& tasks, const ToyPolicy& policy);

// The bundled synthetic task set: arithmetic-flavored token tasks over a
// 5-symbol answer vocabulary, half tier 1, the rest tiers 2 and 3.
std::vector<ToyTask> make_task_set(int count, uint64_t generator_seed);

inline constexpr int kTaskVocab = 5;

}  // namespace logos::toy
