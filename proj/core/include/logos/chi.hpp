#pragma once

#include <map>
#include <string>

#include "logos/dataset.hpp"
#include "logos/judge.hpp"

namespace logos {

// Topic hints: one reusable hint per topic, editable as files on disk.
class HintLibrary {
public:
    // Seeded with the built-in hint for every topic.
    HintLibrary();
    // Overlays <dir>/<topic>.txt files over the built-ins.
    static HintLibrary from_directory(const std::string& dir);

    const std::string& hint(Topic t) const;
    void set_hint(Topic t, std::string text);
    // Writes one file per topic.
    void write_directory(const std::string& dir) const;

private:
    std::map<Topic, std::string> hints_;
};

// The assembled inference prompt [h_topic, x, h_question].
struct ChiPrompt {
    std::string topic_hint;
    std::string question;
    std::string question_hint;  // empty when disabled
    std::string rendered;
};

struct ChiOptions {
    bool topic_hint = true;
    bool question_hint = true;
};

// Section labels doubling as parse separators.
inline constexpr const char* kTopicHintLabel = "Topic guidance:";
inline constexpr const char* kQuestionLabel = "Question:";
inline constexpr const char* kQuestionHintLabel = "Hint:";

// Predicts the question topic with the classifier judge. Cached by the
// gateway. Throws std::invalid_argument on an empty question and ParseError
// on a label outside the taxonomy.
Topic classify_question(const std::string& question, JudgeGateway& gateway,
                        const std::string& classifier_judge);

// Looks up h_topic, asks the hinter judge for h_question, and concatenates
// the labeled sections in exactly that order. The question text is never
// modified.
ChiPrompt assemble_chi_prompt(const std::string& question, Topic topic,
                              const HintLibrary& hints, JudgeGateway& gateway,
                              const std::string& hinter_judge, ChiOptions options = {});

// Recovers the three parts from a rendered prompt (inverse of assembly).
// Throws std::runtime_error when the separators are missing.
ChiPrompt parse_chi_prompt(const std::string& rendered);

}  // namespace logos
