#include "logos/answer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <stdexcept>

namespace logos {

namespace {

struct Span {
    size_t begin, end;
};

std::string trim_view(const std::string& s, Span& span) {
    size_t b = span.begin, e = span.end;
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    span = {b, e};
    return s.substr(b, e - b);
}

// Numbers attached to identifiers or exponents ("cm^2", "x2") are not answer
// candidates.
bool valid_number_start(const std::string& s, size_t pos) {
    if (pos == 0) return true;
    const char before = s[pos - 1];
    return !(std::isalnum(static_cast<unsigned char>(before)) || before == '^' ||
             before == '_' || before == '.');
}

struct NumberCandidate {
    double value;
    Span span;
};

std::vector<NumberCandidate> number_candidates(const std::string& s, size_t offset = 0) {
    std::vector<NumberCandidate> out;
    size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        const bool starts = std::isdigit(static_cast<unsigned char>(c)) ||
                            ((c == '-' || c == '+' || c == '.') && i + 1 < s.size() &&
                             std::isdigit(static_cast<unsigned char>(s[i + 1])));
        if (starts && valid_number_start(s, i)) {
            char* stop = nullptr;
            const double v = std::strtod(s.c_str() + i, &stop);
            const size_t end = stop - s.c_str();
            if (end > i) {
                out.push_back({v, {offset + i, offset + end}});
                i = end;
                continue;
            }
        }
        ++i;
    }
    return out;
}

std::optional<char> as_option_letter(const std::string& s) {
    std::string t = s;
    // Strip wrapping punctuation and emphasis.
    auto strip = [&](const std::string& in) {
        size_t b = 0, e = in.size();
        const std::string junk = "()[]{}*.,:;!?\"' ";
        while (b < e && junk.find(in[b]) != std::string::npos) ++b;
        while (e > b && junk.find(in[e - 1]) != std::string::npos) --e;
        return in.substr(b, e - b);
    };
    t = strip(t);
    if (t.size() != 1) return std::nullopt;
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    if (c >= 'A' && c <= 'E') return c;
    return std::nullopt;
}

std::optional<double> full_string_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* stop = nullptr;
    const double v = std::strtod(s.c_str(), &stop);
    if (stop == s.c_str()) return std::nullopt;
    for (const char* p = stop; *p; ++p) {
        if (!std::isspace(static_cast<unsigned char>(*p))) return std::nullopt;
    }
    return v;
}

ParsedAnswer classify_span(const std::string& raw, Span span) {
    ParsedAnswer p;
    p.text = trim_view(raw, span);
    p.span_begin = span.begin;
    p.span_end = span.end;
    if (auto letter = as_option_letter(p.text)) {
        p.kind = AnswerKind::multiple_choice;
        p.option = *letter;
        return p;
    }
    if (auto value = full_string_number(p.text)) {
        p.kind = AnswerKind::numeric;
        p.number = *value;
        return p;
    }
    p.kind = AnswerKind::exact;
    const auto nums = number_candidates(p.text);
    if (!nums.empty()) p.number = nums.back().value;
    return p;
}

// Character regions of raw_text lying outside <think>...</think> blocks.
std::vector<Span> regions_outside_think(const std::string& raw) {
    std::vector<Span> regions;
    size_t pos = 0;
    while (pos < raw.size()) {
        const size_t open = raw.find("<think>", pos);
        if (open == std::string::npos) {
            regions.push_back({pos, raw.size()});
            break;
        }
        if (open > pos) regions.push_back({pos, open});
        const size_t close = raw.find("</think>", open);
        if (close == std::string::npos) break;  // unclosed: drop the rest
        pos = close + 8;
    }
    return regions;
}

const std::regex& cue_letter_regex() {
    static const std::regex re(
        R"((?:answer|option|choice)\s*(?:is|:|=)?\s*\(?\**([A-Ea-e])\**\)?\b)",
        std::regex::icase);
    return re;
}

}  // namespace

std::optional<ParsedAnswer> parse_final_answer(const ModelResponse& response) {
    const std::string& raw = response.raw_text;
    if (raw.empty()) throw std::invalid_argument("raw_text empty");

    // Preferred: the last <answer>...</answer> block.
    size_t open = raw.rfind("<answer>");
    if (open != std::string::npos) {
        const size_t body = open + 8;
        const size_t close = raw.find("</answer>", body);
        if (close != std::string::npos) {
            Span span{body, close};
            std::string inner = trim_view(raw, span);
            if (inner.empty()) return std::nullopt;
            return classify_span(raw, {body, close});
        }
    }

    // Fallback extraction over text outside <think> blocks.
    const auto regions = regions_outside_think(raw);

    // 1. Last answer-cue option letter.
    std::optional<Span> cue;
    for (const Span& region : regions) {
        const std::string text = raw.substr(region.begin, region.end - region.begin);
        for (auto it = std::sregex_iterator(text.begin(), text.end(), cue_letter_regex());
             it != std::sregex_iterator(); ++it) {
            const auto m = (*it)[1];
            const size_t b = region.begin + (m.first - text.begin());
            cue = Span{b, b + 1};
        }
    }
    if (cue) return classify_span(raw, *cue);

    // 2. A standalone trailing option letter.
    for (auto rit = regions.rbegin(); rit != regions.rend(); ++rit) {
        const std::string text = raw.substr(rit->begin, rit->end - rit->begin);
        const size_t last = text.find_last_not_of(" \t\r\n");
        if (last == std::string::npos) continue;
        size_t start = text.find_last_of(" \t\r\n", last);
        start = start == std::string::npos ? 0 : start + 1;
        const std::string token = text.substr(start, last - start + 1);
        if (as_option_letter(token))
            return classify_span(raw, {rit->begin + start, rit->begin + last + 1});
        break;  // only the very last token qualifies
    }

    // 3. The last number.
    std::optional<NumberCandidate> last_num;
    for (const Span& region : regions) {
        const std::string text = raw.substr(region.begin, region.end - region.begin);
        for (const auto& cand : number_candidates(text, region.begin)) last_num = cand;
    }
    if (last_num) {
        ParsedAnswer p = classify_span(raw, last_num->span);
        p.kind = AnswerKind::numeric;
        p.number = last_num->value;
        return p;
    }

    // 4. The trailing clause after the final sentence break.
    for (auto rit = regions.rbegin(); rit != regions.rend(); ++rit) {
        std::string text = raw.substr(rit->begin, rit->end - rit->begin);
        Span whole{rit->begin, rit->end};
        std::string trimmed = trim_view(raw, whole);
        if (trimmed.empty()) continue;
        // Drop a terminal sentence mark, then take what follows the previous one.
        size_t end = whole.end;
        while (end > whole.begin &&
               std::string(".!?\n").find(raw[end - 1]) != std::string::npos)
            --end;
        size_t begin = whole.begin;
        for (size_t i = end; i > whole.begin; --i) {
            if (std::string(".!?\n").find(raw[i - 1]) != std::string::npos) {
                begin = i;
                break;
            }
        }
        Span clause{begin, end};
        std::string clause_text = trim_view(raw, clause);
        if (clause_text.empty()) continue;
        return classify_span(raw, clause);
    }

    return std::nullopt;
}

ParsedAnswer classify_answer_text(const std::string& text) {
    ParsedAnswer p;
    if (auto letter = as_option_letter(text)) {
        p.kind = AnswerKind::multiple_choice;
        p.option = *letter;
    } else if (auto value = full_string_number(text)) {
        p.kind = AnswerKind::numeric;
        p.number = *value;
    } else {
        p.kind = AnswerKind::exact;
        const auto nums = number_candidates(text);
        if (!nums.empty()) p.number = nums.back().value;
    }
    p.text = text;
    size_t b = 0, e = p.text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(p.text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(p.text[e - 1]))) --e;
    p.text = p.text.substr(b, e - b);
    return p;
}

std::optional<ParsedAnswer> judge_parse_final_answer(const ModelResponse& response,
                                                     JudgeGateway& gateway,
                                                     const std::string& judge_role_name) {
    if (response.raw_text.empty()) throw std::invalid_argument("raw_text empty");
    JudgeRequest req;
    req.template_id = "answer_extractor";
    req.variables = {{"response", response.raw_text}};
    req.judge = judge_role_name;
    req.decode = DecodeKind::free_text;
    const std::string raw = gateway.invoke(req).raw_text;

    std::string reply = raw;
    size_t b = reply.find_first_not_of(" \t\r\n");
    size_t e = reply.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return std::nullopt;
    reply = reply.substr(b, e - b + 1);
    std::string lowered = reply;
    for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lowered == "none") return std::nullopt;

    ParsedAnswer parsed = classify_answer_text(reply);
    const size_t at = response.raw_text.find(parsed.text);
    if (at != std::string::npos) {
        parsed.span_begin = at;
        parsed.span_end = at + parsed.text.size();
    }
    return parsed;
}

std::string normalize_answer_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    while (!out.empty() && std::string(".,:;!?").find(out.back()) != std::string::npos)
        out.pop_back();
    return out;
}

bool match_answer(const std::optional<ParsedAnswer>& parsed, const AnswerKey& key) {
    if (!parsed) return false;
    switch (key.kind) {
        case AnswerKind::multiple_choice: {
            std::optional<char> letter = parsed->option;
            if (!letter) letter = as_option_letter(parsed->text);
            if (!letter) return false;
            return std::toupper(static_cast<unsigned char>(*letter)) ==
                   std::toupper(static_cast<unsigned char>(key.option));
        }
        case AnswerKind::exact:
            return normalize_answer_text(parsed->text) == normalize_answer_text(key.text);
        case AnswerKind::numeric: {
            std::optional<double> value = parsed->number;
            if (!value) {
                const auto nums = number_candidates(parsed->text);
                if (nums.empty()) return false;
                value = nums.back().value;
            }
            const double denom = std::max(std::abs(key.value), kNumericDenominatorFloor);
            return std::abs(*value - key.value) / denom <= key.rel_tolerance;
        }
    }
    return false;
}

double dataset_accuracy(const std::vector<bool>& results) {
    if (results.empty()) throw std::invalid_argument("dataset_accuracy: empty result list");
    size_t correct = 0;
    for (bool b : results) correct += b ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(results.size());
}

}  // namespace logos
