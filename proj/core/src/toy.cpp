#include "logos/toy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace logos::toy {

using json = nlohmann::ordered_json;

std::vector<std::string> validate_task(const ToyTask& task, int vocab) {
    std::vector<std::string> violations;
    if (task.id.empty()) violations.push_back("id empty");
    if (task.answer_tokens.empty() || task.answer_tokens.size() > kMaxAnswerLen)
        violations.push_back("answer length outside 1..8");
    if (vocab < 2 || vocab > kMaxVocab) violations.push_back("vocabulary outside 2..64");
    for (int t : task.answer_tokens) {
        if (t < 0 || t >= vocab) {
            violations.push_back("answer token outside vocabulary");
            break;
        }
    }
    return violations;
}

// ============================================================================
// Policy
// ============================================================================

ToyPolicy::ToyPolicy(int vocab_size, double temperature)
    : vocab_(vocab_size), temperature_(temperature) {
    if (vocab_ < 2 || vocab_ > kMaxVocab)
        throw std::invalid_argument("ToyPolicy: vocabulary outside 2..64");
    if (!(temperature_ > 0.0)) throw std::invalid_argument("ToyPolicy: temperature must be > 0");
}

std::vector<double> ToyPolicy::probs(uint64_t ctx) const {
    auto it = table_.find(ctx);
    std::vector<double> p(vocab_, 0.0);
    if (it == table_.end()) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(vocab_));
        return p;
    }
    const auto& row = it->second;
    double max_logit = row[0];
    for (double l : row) max_logit = std::max(max_logit, l);
    double sum = 0.0;
    for (int v = 0; v < vocab_; ++v) {
        p[v] = std::exp((row[v] - max_logit) / temperature_);
        sum += p[v];
    }
    for (double& x : p) x /= sum;
    return p;
}

double ToyPolicy::log_prob(uint64_t ctx, int token) const {
    if (token < 0 || token >= vocab_) throw std::invalid_argument("log_prob: token out of range");
    auto it = table_.find(ctx);
    if (it == table_.end()) return -std::log(static_cast<double>(vocab_));
    const auto& row = it->second;
    double max_logit = row[0];
    for (double l : row) max_logit = std::max(max_logit, l);
    double sum = 0.0;
    for (int v = 0; v < vocab_; ++v) sum += std::exp((row[v] - max_logit) / temperature_);
    return (row[token] - max_logit) / temperature_ - std::log(sum);
}

int ToyPolicy::sample_token(uint64_t ctx, Rng& rng) const {
    const auto p = probs(ctx);
    const double u = rng.uniform01();
    double acc = 0.0;
    for (int v = 0; v < vocab_; ++v) {
        acc += p[v];
        if (u < acc) return v;
    }
    return vocab_ - 1;
}

int ToyPolicy::argmax_token(uint64_t ctx) const {
    auto it = table_.find(ctx);
    if (it == table_.end()) return 0;  // uniform row: lowest index wins
    const auto& row = it->second;
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

double ToyPolicy::logit(uint64_t ctx, int token) const {
    auto it = table_.find(ctx);
    return it == table_.end() ? 0.0 : it->second[token];
}

void ToyPolicy::add_to_logit(uint64_t ctx, int token, double delta) {
    if (token < 0 || token >= vocab_)
        throw std::invalid_argument("add_to_logit: token out of range");
    auto it = table_.find(ctx);
    if (it == table_.end()) it = table_.emplace(ctx, std::vector<double>(vocab_, 0.0)).first;
    it->second[token] += delta;
}

uint64_t context_key(const std::vector<int>& prompt_tokens, const std::vector<int>& prefix) {
    uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](uint64_t x) {
        for (int b = 0; b < 8; ++b) {
            h ^= (x >> (8 * b)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    feed(prompt_tokens.size());
    for (int t : prompt_tokens) feed(static_cast<uint64_t>(t) + 1);
    feed(0xfffffffffULL);  // prompt/prefix separator
    for (int t : prefix) feed(static_cast<uint64_t>(t) + 1);
    return h;
}

// ============================================================================
// Rendering and rewards
// ============================================================================

std::string answer_text(const std::vector<int>& tokens) {
    std::ostringstream out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out << ' ';
        out << tokens[i];
    }
    return out.str();
}

std::string render_response_text(const ToyTask& task, const std::vector<int>& tokens) {
    return "<think>solve " + task.id + "</think><answer>" + answer_text(tokens) + "</answer>";
}

AnswerKey task_answer_key(const ToyTask& task) {
    return AnswerKey::exact(answer_text(task.answer_tokens));
}

SampledGroup sample_group(const ToyTask& task, const ToyPolicy& policy, int g, uint64_t seed) {
    if (g < 2) throw std::invalid_argument("sample_group: G must be >= 2");
    const auto violations = validate_task(task, policy.vocab_size());
    if (!violations.empty())
        throw std::invalid_argument("sample_group: invalid task '" + task.id +
                                    "': " + violations.front());

    SampledGroup sampled;
    sampled.group.question_id = task.id;
    const AnswerKey key = task_answer_key(task);
    Rng rng(seed);
    for (int i = 0; i < g; ++i) {
        std::vector<int> tokens;
        std::vector<uint64_t> contexts;
        tokens.reserve(task.answer_tokens.size());
        for (size_t t = 0; t < task.answer_tokens.size(); ++t) {
            const uint64_t ctx = context_key(task.prompt_tokens, tokens);
            contexts.push_back(ctx);
            tokens.push_back(policy.sample_token(ctx, rng));
        }
        const std::string text = render_response_text(task, tokens);
        sampled.group.responses.push_back(text);
        sampled.group.rewards.push_back(compute_reward(text, key));
        sampled.tokens.push_back(std::move(tokens));
        sampled.contexts.push_back(std::move(contexts));
    }
    sampled.group.refresh_stats();
    return sampled;
}

// ============================================================================
// Loss and gradient
// ============================================================================

std::vector<std::vector<double>> token_ratios(const SampledGroup& sampled,
                                              const ToyPolicy& old_policy,
                                              const ToyPolicy& current) {
    std::vector<std::vector<double>> ratios;
    ratios.reserve(sampled.tokens.size());
    for (size_t i = 0; i < sampled.tokens.size(); ++i) {
        std::vector<double> row;
        row.reserve(sampled.tokens[i].size());
        for (size_t t = 0; t < sampled.tokens[i].size(); ++t) {
            const uint64_t ctx = sampled.contexts[i][t];
            const int token = sampled.tokens[i][t];
            row.push_back(
                std::exp(current.log_prob(ctx, token) - old_policy.log_prob(ctx, token)));
        }
        ratios.push_back(std::move(row));
    }
    return ratios;
}

namespace {

const std::vector<double>& require_advantages(const SampledGroup& sampled) {
    if (!sampled.group.advantages)
        throw std::invalid_argument("group has no advantages (run compute_advantages first)");
    if (sampled.group.advantages->size() != sampled.tokens.size())
        throw std::invalid_argument("advantage count does not match group size");
    return *sampled.group.advantages;
}

}  // namespace

double group_loss(const SampledGroup& sampled, const ToyPolicy& old_policy,
                  const ToyPolicy& current, const ClipConfig& cfg) {
    return grpo_loss(token_ratios(sampled, old_policy, current), require_advantages(sampled), cfg);
}

std::map<std::pair<uint64_t, int>, double> group_gradient(const SampledGroup& sampled,
                                                          const ToyPolicy& old_policy,
                                                          const ToyPolicy& current,
                                                          const ClipConfig& cfg) {
    cfg.validate();
    const auto& advantages = require_advantages(sampled);
    const size_t g = sampled.tokens.size();
    if (g != static_cast<size_t>(cfg.group_size))
        throw std::invalid_argument("group_gradient: group size does not match config");

    std::map<std::pair<uint64_t, int>, double> grad;
    const double inv_g = 1.0 / static_cast<double>(g);
    for (size_t i = 0; i < g; ++i) {
        const double a = advantages[i];
        const size_t len = sampled.tokens[i].size();
        if (len == 0) throw std::invalid_argument("group_gradient: empty response");
        const double inv_len = 1.0 / static_cast<double>(len);
        for (size_t t = 0; t < len; ++t) {
            const uint64_t ctx = sampled.contexts[i][t];
            const int token = sampled.tokens[i][t];
            const double ratio =
                std::exp(current.log_prob(ctx, token) - old_policy.log_prob(ctx, token));
            // The clipped branch has zero derivative; the unclipped branch is
            // active when it attains the min.
            const bool active = (a >= 0.0 && ratio <= 1.0 + cfg.epsilon) ||
                                (a < 0.0 && ratio >= 1.0 - cfg.epsilon);
            if (!active) continue;
            // d loss / d log pi(token|ctx) for this term
            const double w = -inv_g * inv_len * a * ratio;
            if (w == 0.0) continue;
            const auto p = current.probs(ctx);
            for (int v = 0; v < current.vocab_size(); ++v) {
                const double indicator = v == token ? 1.0 : 0.0;
                grad[{ctx, v}] += w * (indicator - p[v]) / current.temperature();
            }
        }
    }
    return grad;
}

StepResult policy_gradient_step(const SampledGroup& sampled, const ToyPolicy& old_policy,
                                const ToyPolicy& current, const ClipConfig& cfg,
                                double step_size) {
    const double loss = group_loss(sampled, old_policy, current, cfg);
    const auto grad = group_gradient(sampled, old_policy, current, cfg);
    StepResult result{current, loss};
    for (const auto& [key, g] : grad) {
        if (!std::isfinite(g))
            throw std::runtime_error("non-finite gradient at context " +
                                     std::to_string(key.first));
        result.policy.add_to_logit(key.first, key.second, -step_size * g);
    }
    return result;
}

// ============================================================================
// Curriculum
// ============================================================================

void TrainConfig::validate() const {
    if (group_size < 2) throw std::invalid_argument("TrainConfig: G must be >= 2");
    if (epochs_per_stage < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (curriculum_rounds < 1) throw std::invalid_argument("TrainConfig: k must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("TrainConfig: epsilon must be in (0, 1)");
    if (!(step_size > 0.0)) throw std::invalid_argument("TrainConfig: step size must be > 0");
}

double greedy_accuracy(const std::vector<ToyTask>& tasks, const ToyPolicy& policy) {
    if (tasks.empty()) return 0.0;
    size_t correct = 0;
    for (const auto& task : tasks) {
        std::vector<int> tokens;
        for (size_t t = 0; t < task.answer_tokens.size(); ++t)
            tokens.push_back(policy.argmax_token(context_key(task.prompt_tokens, tokens)));
        correct += tokens == task.answer_tokens ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(tasks.size());
}

namespace {

uint64_t stream_seed(uint64_t seed, uint64_t stage, uint64_t epoch, uint64_t idx) {
    return mix64(mix64(mix64(seed, stage), epoch), idx);
}

int required_vocab(const std::vector<ToyTask>& tasks) {
    int max_token = 1;
    for (const auto& task : tasks)
        for (int t : task.answer_tokens) max_token = std::max(max_token, t);
    return max_token + 1;
}

}  // namespace

TrainLog run_curriculum(const std::vector<ToyTask>& tasks, const TrainConfig& cfg) {
    cfg.validate();
    if (tasks.empty()) throw std::invalid_argument("run_curriculum: no tasks");
    const int vocab = required_vocab(tasks);
    for (const auto& task : tasks) {
        const auto violations = validate_task(task, vocab);
        if (!violations.empty())
            throw std::invalid_argument("task '" + task.id + "': " + violations.front());
    }

    ToyPolicy policy(vocab);
    TrainLog log;
    log.task_count = static_cast<int>(tasks.size());
    log.initial_accuracy = greedy_accuracy(tasks, policy);
    std::vector<size_t> stage1_kept;
    const int total_stages = 1 + cfg.curriculum_rounds;

    for (int stage = 1; stage <= total_stages; ++stage) {
        // Pre-sampling pass over the full pool with the current policy.
        std::vector<size_t> kept;
        StageRecord stage_record;
        for (size_t idx = 0; idx < tasks.size(); ++idx) {
            const auto sampled = sample_group(tasks[idx], policy, cfg.group_size,
                                              stream_seed(cfg.seed, stage, 0, idx));
            stage_record.presample.emplace_back(tasks[idx].id, sampled.group.avg_acc);
            if (crft_filter(sampled.group.avg_acc, stage)) {
                kept.push_back(idx);
                stage_record.kept_ids.push_back(tasks[idx].id);
            }
        }
        stage_record.stage = stage;
        stage_record.kept = static_cast<int>(kept.size());
        stage_record.discarded_by_filter = static_cast<int>(tasks.size() - kept.size());
        if (stage == 1) {
            stage1_kept = kept;
            stage_record.kept_also_in_stage1 = stage_record.kept;
        } else {
            for (size_t idx : kept) {
                if (std::find(stage1_kept.begin(), stage1_kept.end(), idx) != stage1_kept.end())
                    ++stage_record.kept_also_in_stage1;
            }
        }
        log.stages.push_back(stage_record);
        if (kept.empty())
            throw std::runtime_error("curriculum exhausted at stage " + std::to_string(stage));

        double step = cfg.step_size;
        for (int epoch = 1; epoch <= cfg.epochs_per_stage; ++epoch) {
            int orf_discards = 0;
            double reward_sum = 0.0;
            double loss_sum = 0.0;
            double loss_after_sum = 0.0;
            int steps_applied = 0;
            for (size_t idx : kept) {
                // pi_old refreshed at every optimization iteration
                const ToyPolicy old_policy = policy;
                auto sampled = sample_group(tasks[idx], old_policy, cfg.group_size,
                                            stream_seed(cfg.seed, stage, epoch, idx));
                const auto totals = sampled.group.total_rewards();
                for (double r : totals) reward_sum += r;
                if (!orf_keep(totals)) {
                    ++orf_discards;
                    continue;
                }
                auto advantages = compute_advantages(totals);
                if (!advantages) {  // degenerate std past the ORF gate
                    ++orf_discards;
                    continue;
                }
                sampled.group.advantages = std::move(advantages);
                auto result = policy_gradient_step(sampled, old_policy, policy,
                                                   ClipConfig{cfg.epsilon, cfg.group_size}, step);
                policy = std::move(result.policy);
                loss_sum += result.loss;
                loss_after_sum += group_loss(sampled, old_policy, policy,
                                             ClipConfig{cfg.epsilon, cfg.group_size});
                ++steps_applied;
            }
            step *= cfg.step_decay;

            EpochRecord record;
            record.stage = stage;
            record.epoch = epoch;
            record.kept = static_cast<int>(kept.size());
            record.discarded_orf = orf_discards;
            record.mean_reward =
                reward_sum / static_cast<double>(kept.size() * cfg.group_size);
            record.loss = steps_applied > 0 ? loss_sum / steps_applied : 0.0;
            record.loss_after = steps_applied > 0 ? loss_after_sum / steps_applied : 0.0;
            record.accuracy = greedy_accuracy(tasks, policy);
            log.epochs.push_back(record);
        }
    }
    log.final_policy = std::move(policy);
    return log;
}

std::string TrainLog::to_jsonl() const {
    std::ostringstream out;
    {
        json j;
        j["type"] = "start";
        j["tasks"] = task_count;
        j["accuracy"] = initial_accuracy;
        out << j.dump() << '\n';
    }
    for (const auto& s : stages) {
        json j;
        j["type"] = "stage";
        j["stage"] = s.stage;
        j["kept"] = s.kept;
        j["discarded_by_filter"] = s.discarded_by_filter;
        j["kept_also_in_stage1"] = s.kept_also_in_stage1;
        json presample = json::array();
        for (const auto& [id, avg] : s.presample)
            presample.push_back({{"id", id}, {"avg_acc", avg}});
        j["presample"] = std::move(presample);
        j["kept_ids"] = s.kept_ids;
        out << j.dump() << '\n';
    }
    for (const auto& e : epochs) {
        json j;
        j["type"] = "epoch";
        j["stage"] = e.stage;
        j["epoch"] = e.epoch;
        j["kept"] = e.kept;
        j["discarded_orf"] = e.discarded_orf;
        j["mean_reward"] = e.mean_reward;
        j["loss"] = e.loss;
        j["loss_after"] = e.loss_after;
        j["accuracy"] = e.accuracy;
        out << j.dump() << '\n';
    }
    return out.str();
}

std::vector<ToyTask> make_task_set(int count, uint64_t generator_seed) {
    if (count < 1) throw std::invalid_argument("make_task_set: count must be >= 1");
    std::vector<ToyTask> tasks;
    tasks.reserve(count);
    Rng rng(generator_seed);
    for (int i = 0; i < count; ++i) {
        // Half the set is tier 1, 35% tier 2, the rest tier 3.
        int tier;
        if (i * 2 < count) {
            tier = 1;
        } else if (i * 20 < count * 17) {
            tier = 2;
        } else {
            tier = 3;
        }
        ToyTask task;
        char id[32];
        std::snprintf(id, sizeof(id), "task-%04d", i);
        task.id = id;
        task.tier = tier;
        task.prompt_tokens = {i, static_cast<int>(rng.bounded(1000))};
        for (int t = 0; t < tier; ++t)
            task.answer_tokens.push_back(static_cast<int>(rng.bounded(kTaskVocab)));
        tasks.push_back(std::move(task));
    }
    return tasks;
}

}  // namespace logos::toy
