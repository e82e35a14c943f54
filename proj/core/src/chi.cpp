#include "logos/chi.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace logos {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::map<Topic, std::string>& builtin_hints() {
    static const std::map<Topic, std::string> hints = {
        {Topic::algebra,
         "Introduce a variable for each unknown, translate the statement into "
         "equations, and solve them step by step, checking the solution against "
         "every original condition."},
        {Topic::arithmetic,
         "Work the computation in small exact steps, keep track of units and "
         "signs, and re-evaluate the final expression once from scratch to "
         "confirm the value."},
        {Topic::geometry,
         "Name the relevant points, segments, and angles, state which theorem "
         "or formula applies (similarity, Pythagoras, area formulas), and "
         "derive each quantity from stated givens only."},
        {Topic::logical,
         "List the rules or constraints explicitly, apply them one at a time "
         "to eliminate impossible cases, and verify the surviving case against "
         "every rule before concluding."},
        {Topic::scientific,
         "Write down the governing principle or law first, check which "
         "quantities are given in which units, and substitute values only "
         "after the symbolic relation is settled."},
        {Topic::spatial,
         "Fix an orientation or coordinate frame before reasoning, track each "
         "rotation, reflection, or fold as an explicit transformation, and "
         "re-check relative positions after every operation."},
        {Topic::statistical,
         "Read off the exact values or counts from the data first, state which "
         "summary (mean, difference, ratio, trend) the question asks for, and "
         "compute it from those values alone."},
    };
    return hints;
}

}  // namespace

HintLibrary::HintLibrary() : hints_(builtin_hints()) {}

HintLibrary HintLibrary::from_directory(const std::string& dir) {
    HintLibrary lib;
    for (Topic t : kAllTopics) {
        const fs::path file = fs::path(dir) / (std::string(to_string(t)) + ".txt");
        std::ifstream in(file);
        if (!in) continue;
        std::ostringstream body;
        body << in.rdbuf();
        const std::string text = trim(body.str());
        if (!text.empty()) lib.hints_[t] = text;
    }
    return lib;
}

const std::string& HintLibrary::hint(Topic t) const { return hints_.at(t); }

void HintLibrary::set_hint(Topic t, std::string text) {
    if (trim(text).empty()) throw std::invalid_argument("hint text empty");
    hints_[t] = std::move(text);
}

void HintLibrary::write_directory(const std::string& dir) const {
    fs::create_directories(dir);
    for (const auto& [topic, text] : hints_) {
        std::ofstream out(fs::path(dir) / (std::string(to_string(topic)) + ".txt"));
        out << text << '\n';
    }
}

Topic classify_question(const std::string& question, JudgeGateway& gateway,
                        const std::string& classifier_judge) {
    if (trim(question).empty()) throw std::invalid_argument("question empty");
    JudgeRequest req;
    req.template_id = "classifier";
    req.variables = {{"question", question}};
    req.judge = classifier_judge;
    req.decode = DecodeKind::class_label;
    return std::get<Topic>(gateway.invoke(req).decoded);
}

ChiPrompt assemble_chi_prompt(const std::string& question, Topic topic,
                              const HintLibrary& hints, JudgeGateway& gateway,
                              const std::string& hinter_judge, ChiOptions options) {
    if (trim(question).empty()) throw std::invalid_argument("question empty");

    ChiPrompt prompt;
    prompt.question = question;
    if (options.topic_hint) prompt.topic_hint = hints.hint(topic);
    if (options.question_hint) {
        JudgeRequest req;
        req.template_id = "hinter";
        req.variables = {{"question", question}};
        req.judge = hinter_judge;
        req.decode = DecodeKind::free_text;
        prompt.question_hint = trim(gateway.invoke(req).raw_text);
    }

    std::ostringstream out;
    if (options.topic_hint) out << kTopicHintLabel << '\n' << prompt.topic_hint << "\n\n";
    out << kQuestionLabel << '\n' << prompt.question;
    if (options.question_hint) out << "\n\n" << kQuestionHintLabel << '\n' << prompt.question_hint;
    prompt.rendered = out.str();
    return prompt;
}

ChiPrompt parse_chi_prompt(const std::string& rendered) {
    ChiPrompt parts;
    const std::string topic_marker = std::string(kTopicHintLabel) + "\n";
    const std::string question_marker = "\n\n" + std::string(kQuestionLabel) + "\n";
    const std::string hint_marker = "\n\n" + std::string(kQuestionHintLabel) + "\n";

    size_t question_begin = 0;
    if (rendered.rfind(topic_marker, 0) == 0) {
        const size_t q = rendered.find(question_marker);
        if (q == std::string::npos)
            throw std::runtime_error("chi prompt: question separator missing");
        parts.topic_hint = rendered.substr(topic_marker.size(), q - topic_marker.size());
        question_begin = q + question_marker.size();
    } else {
        const std::string bare = std::string(kQuestionLabel) + "\n";
        if (rendered.rfind(bare, 0) != 0)
            throw std::runtime_error("chi prompt: question separator missing");
        question_begin = bare.size();
    }

    const size_t h = rendered.rfind(hint_marker);
    if (h != std::string::npos && h >= question_begin) {
        parts.question = rendered.substr(question_begin, h - question_begin);
        parts.question_hint = rendered.substr(h + hint_marker.size());
    } else {
        parts.question = rendered.substr(question_begin);
    }
    return parts;
}

}  // namespace logos
