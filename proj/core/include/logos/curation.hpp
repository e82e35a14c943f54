#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "logos/dataset.hpp"
#include "logos/judge.hpp"

namespace logos {

// What one question looked like to the describer and solver models.
// verified_accurate may be absent in offline traces; verify_traces fills it
// through the verifier judge.
struct DescriberEntry {
    std::string description;
    std::optional<bool> verified_accurate;
};

struct SolverEntry {
    bool reasoning_correct = false;
};

struct PerceptionTrace {
    std::string question_id;
    std::vector<DescriberEntry> describers;
    std::vector<SolverEntry> solvers;
};

std::vector<std::string> validate_trace(const PerceptionTrace& trace);

// Line-delimited trace file keyed by question_id.
std::vector<PerceptionTrace> load_traces(const std::string& path);
void save_traces(const std::string& path, const std::vector<PerceptionTrace>& traces);

// Fills missing verified_accurate flags by asking the verifier judge to
// compare each description against the record's reference description (the
// prompt text when no reference exists). Entries already carrying a flag are
// untouched.
void verify_traces(std::vector<PerceptionTrace>& traces,
                   const std::vector<QuestionRecord>& records, JudgeGateway& gateway,
                   const std::string& verifier_judge);

// Keeps a question iff at least min_describers_ok descriptions are verified
// accurate AND at least min_solver_errors solvers got the reasoning wrong.
// Output preserves trace order. Throws if any describer entry still lacks
// its verification flag.
std::vector<std::string> difficulty_filter(const std::vector<PerceptionTrace>& traces,
                                           int min_describers_ok, int min_solver_errors);

// Topic-balanced sampling without replacement. Per-topic counts c_t satisfy
// max_t c_t / min_t c_t <= max_imbalance. Topics short of target keep their
// whole supply; oversized topics are trimmed to respect the ratio. Seeded
// and reproducible. Throws on a topic with zero supply, naming it.
std::vector<std::string> balance_sample(const std::map<Topic, std::vector<std::string>>& by_topic,
                                        int target_per_topic, double max_imbalance,
                                        uint64_t seed);

inline constexpr double kDefaultMaxImbalance = 1.1;

}  // namespace logos
