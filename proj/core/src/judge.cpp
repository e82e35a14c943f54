#include "logos/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <condition_variable>
#include <cstdlib>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "logos/rng.hpp"

namespace logos {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(DecodeKind k) {
    switch (k) {
        case DecodeKind::matching_vectors: return "matching_vectors";
        case DecodeKind::type_flags: return "type_flags";
        case DecodeKind::dimension_scores: return "dimension_scores";
        case DecodeKind::free_text: return "free_text";
        case DecodeKind::class_label: return "class_label";
    }
    return "free_text";
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

// ============================================================================
// Small string helpers
// ============================================================================

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// Splits prose into trimmed sentences on ., !, ?, ; and newlines.
std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        cur.push_back(c);
        if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
            std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        }
    }
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

std::vector<double> extract_numbers(const std::string& text) {
    std::vector<double> nums;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            ((c == '-' || c == '+' || c == '.') && i + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            size_t end = i;
            char* stop = nullptr;
            double v = std::strtod(text.c_str() + i, &stop);
            end = stop - text.c_str();
            if (end > i) {
                nums.push_back(v);
                i = end;
                continue;
            }
        }
        ++i;
    }
    return nums;
}

}  // namespace

// ============================================================================
// Payload fences
// ============================================================================

std::string fence_payload(const std::string& text) {
    return std::string(kPayloadOpen) + "\n" + text + "\n" + kPayloadClose;
}

std::optional<std::string> extract_payload(const std::string& rendered, int index) {
    size_t pos = 0;
    for (int seen = 0;; ++seen) {
        size_t open = rendered.find(kPayloadOpen, pos);
        if (open == std::string::npos) return std::nullopt;
        size_t body = open + std::strlen(kPayloadOpen);
        size_t close = rendered.find(kPayloadClose, body);
        if (close == std::string::npos) return std::nullopt;
        if (seen == index) {
            std::string inner = rendered.substr(body, close - body);
            // Strip the newlines the fence layout adds around the payload.
            if (!inner.empty() && inner.front() == '\n') inner.erase(inner.begin());
            if (!inner.empty() && inner.back() == '\n') inner.pop_back();
            return inner;
        }
        pos = close + std::strlen(kPayloadClose);
    }
}

// ============================================================================
// Built-in templates
// ============================================================================

const std::map<std::string, std::string>& builtin_templates() {
    static const std::map<std::string, std::string> templates = {
        {"echo", "{{x}}"},
        {"answer_extractor",
         "Read the response below and extract its final answer.\n"
         "\n"
         "Response:\n"
         "<<<\n"
         "{{response}}\n"
         ">>>\n"
         "\n"
         "Reply with the final answer only: a single option letter, a number,\n"
         "or a short phrase. Reply exactly none if the response contains no\n"
         "final answer.\n"},
        {"extractor",
         "You will be shown a reasoning chain. Select the key reasoning steps\n"
         "(at most 10) and the key intermediate claims (at most 10). A step is\n"
         "one reasoning move; a claim is one factual assertion produced along\n"
         "the way. Keep each item to a single sentence taken or paraphrased\n"
         "from the chain.\n"
         "\n"
         "Chain:\n"
         "<<<\n"
         "{{chain}}\n"
         ">>>\n"
         "\n"
         "Reply in exactly this format:\n"
         "Steps:\n"
         "1. <first step>\n"
         "Claims:\n"
         "1. <first claim>\n"},
        {"matcher",
         "Compare two lists of reasoning items. There are {{n_pred}} predicted\n"
         "items and {{n_gt}} ground-truth items.\n"
         "\n"
         "Predicted items:\n"
         "<<<\n"
         "{{pred_items}}\n"
         ">>>\n"
         "\n"
         "Ground-truth items:\n"
         "<<<\n"
         "{{gt_items}}\n"
         ">>>\n"
         "\n"
         "For each predicted item output 1 if its content is covered by any\n"
         "ground-truth item, else 0. For each ground-truth item output 1 if it\n"
         "is stated anywhere in the predicted list, else 0.\n"
         "\n"
         "Reply in exactly this format:\n"
         "PRED: <{{n_pred}} space-separated bits>\n"
         "GT: <{{n_gt}} space-separated bits>\n"},
        {"detector",
         "Compare the predicted reasoning items with the ground-truth items and\n"
         "decide which hallucination types the prediction exhibits, if any.\n"
         "\n"
         "Types:\n"
         "- spatial: errors when reasoning about spatial relationships, shapes, or visual operations\n"
         "- logical: inconsistent or invalid reasoning even where the individual facts are correct\n"
         "- factuality: incorrect claims about established knowledge or about facts given in the input\n"
         "- context: intermediate reasoning that disagrees with the final prediction\n"
         "- fabrication: invented values, entities, or relationships present neither in the input nor in the real world\n"
         "\n"
         "Predicted steps:\n"
         "<<<\n"
         "{{pred_steps}}\n"
         ">>>\n"
         "\n"
         "Predicted claims:\n"
         "<<<\n"
         "{{pred_claims}}\n"
         ">>>\n"
         "\n"
         "Ground-truth steps:\n"
         "<<<\n"
         "{{gt_steps}}\n"
         ">>>\n"
         "\n"
         "Ground-truth claims:\n"
         "<<<\n"
         "{{gt_claims}}\n"
         ">>>\n"
         "\n"
         "Reply with one line:\n"
         "Types: <comma-separated subset of spatial, logical, factuality, context, fabrication; or none>\n"},
        {"scorer",
         "Score the response chain against the reference chain on five\n"
         "dimensions, each as an integer from 0 (completely hallucinated) to 10\n"
         "(flawless):\n"
         "factual: factual accuracy\n"
         "logical: logical consistency\n"
         "completeness: reasoning completeness\n"
         "conceptual: conceptual accuracy\n"
         "strategy: strategy appropriateness\n"
         "\n"
         "Reference chain:\n"
         "<<<\n"
         "{{reference}}\n"
         ">>>\n"
         "\n"
         "Response chain:\n"
         "<<<\n"
         "{{response}}\n"
         ">>>\n"
         "\n"
         "Reply in exactly this format:\n"
         "factual: <0-10>\n"
         "logical: <0-10>\n"
         "completeness: <0-10>\n"
         "conceptual: <0-10>\n"
         "strategy: <0-10>\n"},
        {"rewriter",
         "Rewrite the reference reasoning chain below, preserving every fact,\n"
         "every step, and the final conclusion while varying the wording and\n"
         "sentence structure. This is rewrite variant {{variant}}.\n"
         "\n"
         "Reference chain:\n"
         "<<<\n"
         "{{chain}}\n"
         ">>>\n"
         "\n"
         "Reply with the rewritten chain only.\n"},
        {"classifier",
         "Classify the question below into exactly one topic out of:\n"
         "algebra, arithmetic, geometry, logical, scientific, spatial,\n"
         "statistical.\n"
         "\n"
         "Question:\n"
         "<<<\n"
         "{{question}}\n"
         ">>>\n"
         "\n"
         "Reply with the single topic word only.\n"},
        {"hinter",
         "Write one short hint (at most two sentences) that helps solve the\n"
         "question below without revealing the answer. Point at the relevant\n"
         "quantities, relations, or method.\n"
         "\n"
         "Question:\n"
         "<<<\n"
         "{{question}}\n"
         ">>>\n"
         "\n"
         "Reply with the hint only.\n"},
        {"verifier",
         "Decide whether the candidate description below is an accurate\n"
         "description of the same scene or data that the reference describes.\n"
         "\n"
         "Reference description:\n"
         "<<<\n"
         "{{reference}}\n"
         ">>>\n"
         "\n"
         "Candidate description:\n"
         "<<<\n"
         "{{candidate}}\n"
         ">>>\n"
         "\n"
         "Reply with exactly one word: accurate or inaccurate.\n"},
    };
    return templates;
}

// ============================================================================
// Decoders
// ============================================================================

namespace {

std::optional<std::vector<int>> parse_bit_list(const std::string& s) {
    std::vector<int> bits;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '0' || c == '1') {
            bits.push_back(c - '0');
        } else if (c == ' ' || c == '\t' || c == ',') {
            continue;
        } else {
            return std::nullopt;
        }
    }
    if (bits.empty()) return std::nullopt;
    return bits;
}

}  // namespace

MatchingVectors decode_matching_vectors(const std::string& raw) {
    MatchingVectors mv;
    bool have_pred = false, have_gt = false;
    // Strict grammar: "PRED: <bits>" and "GT: <bits>" lines.
    for (const auto& line : split_lines(raw)) {
        const std::string t = trim(line);
        const std::string lt = lower(t);
        if (lt.rfind("pred:", 0) == 0) {
            if (auto bits = parse_bit_list(trim(t.substr(5)))) {
                mv.pred = *bits;
                have_pred = true;
            }
        } else if (lt.rfind("gt:", 0) == 0) {
            if (auto bits = parse_bit_list(trim(t.substr(3)))) {
                mv.gt = *bits;
                have_gt = true;
            }
        }
    }
    if (have_pred && have_gt) return mv;
    // Fallback: first two lines consisting only of bits.
    std::vector<std::vector<int>> found;
    for (const auto& line : split_lines(raw)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (auto bits = parse_bit_list(t)) found.push_back(*bits);
        if (found.size() == 2) break;
    }
    if (found.size() == 2) return MatchingVectors{found[0], found[1]};
    throw ParseError("matching vectors not found (expected PRED:/GT: bit lines)", raw);
}

TypeFlags decode_type_flags(const std::string& raw) {
    auto parse_list = [&](const std::string& list) -> TypeFlags {
        TypeFlags flags;
        std::istringstream in(list);
        std::string item;
        while (std::getline(in, item, ',')) {
            std::string name = lower(trim(item));
            if (name.empty()) continue;
            if (name == "none") continue;
            auto t = parse_hallucination_type(name);
            if (!t) throw ParseError("unknown hallucination type label '" + name + "'", raw);
            flags.types.insert(*t);
        }
        return flags;
    };
    for (const auto& line : split_lines(raw)) {
        const std::string t = trim(line);
        const std::string lt = lower(t);
        if (lt.rfind("types:", 0) == 0) return parse_list(t.substr(6));
    }
    // Fallback: a bare comma-separated list (or "none") as the whole reply.
    const std::string whole = trim(raw);
    if (!whole.empty() && whole.find('\n') == std::string::npos) return parse_list(whole);
    throw ParseError("no 'Types:' line in detector reply", raw);
}

DimensionScores decode_dimension_scores(const std::string& raw) {
    std::array<std::optional<double>, 5> named;
    for (const auto& line : split_lines(raw)) {
        const std::string t = lower(trim(line));
        for (size_t d = 0; d < kDimensionNames.size(); ++d) {
            const std::string prefix = std::string(kDimensionNames[d]) + ":";
            if (t.rfind(prefix, 0) == 0) {
                auto nums = extract_numbers(t.substr(prefix.size()));
                if (nums.size() == 1) named[d] = nums[0];
            }
        }
    }
    std::vector<double> values;
    if (std::all_of(named.begin(), named.end(), [](const auto& v) { return v.has_value(); })) {
        for (const auto& v : named) values.push_back(*v);
    } else {
        // Fallback: exactly five numbers anywhere in the reply.
        auto nums = extract_numbers(raw);
        if (nums.size() != 5) {
            throw ParseError("expected 5 dimension scores, found " +
                                 std::to_string(nums.size()),
                             raw);
        }
        values = std::move(nums);
    }
    // The prompt asks for integers on a 0-10 scale. All-integral replies are
    // divided by 10; fractional replies must already lie in [0,1].
    for (double v : values) {
        if (v < 0.0 || v > 10.0)
            throw ParseError("dimension score out of range: " + std::to_string(v), raw);
    }
    const bool integral = std::all_of(values.begin(), values.end(),
                                      [](double v) { return v == std::floor(v); });
    DimensionScores out;
    for (size_t d = 0; d < 5; ++d) {
        const double v = integral ? values[d] / 10.0 : values[d];
        if (v < 0.0 || v > 1.0)
            throw ParseError("dimension score out of range: " + std::to_string(values[d]), raw);
        out.s[d] = v;
    }
    return out;
}

Topic decode_class_label(const std::string& raw) {
    const std::string whole = lower(trim(raw));
    if (auto t = parse_topic(whole)) return *t;
    // Fallback: exactly one distinct topic word mentioned anywhere.
    std::set<Topic> seen;
    const std::string padded = " " + whole + " ";
    for (Topic t : kAllTopics) {
        const std::string needle = std::string(to_string(t));
        size_t pos = padded.find(needle);
        while (pos != std::string::npos) {
            const char before = padded[pos - 1];
            const char after = padded[pos + needle.size()];
            if (!std::isalnum(static_cast<unsigned char>(before)) &&
                !std::isalnum(static_cast<unsigned char>(after))) {
                seen.insert(t);
                break;
            }
            pos = padded.find(needle, pos + 1);
        }
    }
    if (seen.size() == 1) return *seen.begin();
    throw ParseError("reply does not name exactly one topic", raw);
}

DecodedVerdict decode_verdict(DecodeKind kind, const std::string& raw) {
    switch (kind) {
        case DecodeKind::matching_vectors: return decode_matching_vectors(raw);
        case DecodeKind::type_flags: return decode_type_flags(raw);
        case DecodeKind::dimension_scores: return decode_dimension_scores(raw);
        case DecodeKind::class_label: return decode_class_label(raw);
        case DecodeKind::free_text: return raw;
    }
    return raw;
}

// ============================================================================
// Mock judge
// ============================================================================

namespace {

// Counts named in the matcher prompt, e.g. "4 predicted" / "3 ground-truth".
std::optional<int> count_before(const std::string& prompt, const std::string& word) {
    size_t pos = prompt.find(word);
    while (pos != std::string::npos) {
        size_t end = pos;
        while (end > 0 && std::isspace(static_cast<unsigned char>(prompt[end - 1]))) --end;
        size_t begin = end;
        while (begin > 0 && std::isdigit(static_cast<unsigned char>(prompt[begin - 1]))) --begin;
        if (begin < end) return std::stoi(prompt.substr(begin, end - begin));
        pos = prompt.find(word, pos + 1);
    }
    return std::nullopt;
}

std::string mock_extractor_reply(const std::string& prompt) {
    const std::string chain = extract_payload(prompt).value_or("");
    auto sentences = split_sentences(chain);
    if (sentences.empty()) sentences.push_back("(empty chain)");
    std::vector<std::string> claims;
    for (const auto& s : sentences) {
        if (s.find_first_of("0123456789=") != std::string::npos) claims.push_back(s);
    }
    if (claims.empty()) claims.push_back(sentences.back());
    std::ostringstream out;
    out << "Steps:\n";
    for (size_t i = 0; i < sentences.size(); ++i)
        out << (i + 1) << ". " << sentences[i] << "\n";
    out << "Claims:\n";
    for (size_t i = 0; i < claims.size(); ++i) out << (i + 1) << ". " << claims[i] << "\n";
    return out.str();
}

}  // namespace

std::string mock_response(const std::string& rendered_prompt, DecodeKind decode) {
    const uint64_t h = fnv1a64(rendered_prompt);
    switch (decode) {
        case DecodeKind::matching_vectors: {
            const int n_pred = count_before(rendered_prompt, " predicted").value_or(1);
            const int n_gt = count_before(rendered_prompt, " ground-truth").value_or(1);
            std::ostringstream out;
            out << "PRED:";
            for (int i = 0; i < n_pred; ++i) out << " 1";
            out << "\nGT:";
            for (int i = 0; i < n_gt; ++i) out << " 1";
            out << "\n";
            return out.str();
        }
        case DecodeKind::type_flags:
            return "Types: none\n";
        case DecodeKind::dimension_scores: {
            // Identical reference and response payloads score a perfect 10.
            const auto ref = extract_payload(rendered_prompt, 0);
            const auto resp = extract_payload(rendered_prompt, 1);
            const bool identical = ref && resp && trim(*ref) == trim(*resp);
            std::ostringstream out;
            for (size_t d = 0; d < kDimensionNames.size(); ++d) {
                const uint64_t v = identical ? 10 : mix64(h, d) % 11;
                out << kDimensionNames[d] << ": " << v << "\n";
            }
            return out.str();
        }
        case DecodeKind::class_label:
            return std::string(to_string(kAllTopics[h % kAllTopics.size()]));
        case DecodeKind::free_text: {
            if (rendered_prompt.find("Steps:\n1. <first step>") != std::string::npos)
                return mock_extractor_reply(rendered_prompt);
            if (rendered_prompt.find("Reply with the rewritten chain only.") != std::string::npos) {
                const std::string chain = extract_payload(rendered_prompt).value_or("");
                return "Put differently (" + sha256_hex(rendered_prompt).substr(0, 6) +
                       "): " + chain;
            }
            if (rendered_prompt.find("Reply with the hint only.") != std::string::npos) {
                return "Identify the given quantities first, then apply the standard "
                       "relation for this setting one step at a time. [" +
                       sha256_hex(rendered_prompt).substr(0, 6) + "]";
            }
            if (rendered_prompt.find("accurate or inaccurate") != std::string::npos)
                return "accurate";
            if (rendered_prompt.find("extract its final answer") != std::string::npos)
                return "none";
            return "mock:" + sha256_hex(rendered_prompt).substr(0, 16);
        }
    }
    return "mock:" + sha256_hex(rendered_prompt).substr(0, 16);
}

// ============================================================================
// HTTP transport
// ============================================================================

std::string HttpTransport::complete(const JudgeSpec& spec, const std::string& prompt,
                                    DecodeKind /*decode*/) {
    // Split the endpoint into origin and path.
    const std::string& url = spec.endpoint;
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError("judge '" + spec.name + "': endpoint has no scheme: " + url);
    size_t path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(spec.timeout);
    client.set_read_timeout(spec.timeout);
    client.set_write_timeout(spec.timeout);

    httplib::Headers headers;
    if (!spec.api_key_env.empty()) {
        const char* key = std::getenv(spec.api_key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["model"] = spec.model_id;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = 0;

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw TransportError("judge '" + spec.name +
                             "': " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("judge '" + spec.name + "': HTTP " + std::to_string(res->status) +
                             ": " + res->body.substr(0, 200));
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw TransportError("judge '" + spec.name + "': malformed completion reply: " +
                             std::string(e.what()));
    }
}

// ============================================================================
// Gateway
// ============================================================================

namespace {

// Counting gate bounding in-flight transport calls per judge.
class Gate {
public:
    explicit Gate(int n) : count_(n) {}
    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

struct GateGuard {
    explicit GateGuard(Gate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
    Gate& gate;
};

}  // namespace

struct JudgeGateway::PerJudge {
    JudgeSpec spec;
    std::shared_ptr<Transport> transport;
    std::unique_ptr<Gate> gate;
};

JudgeGateway::~JudgeGateway() = default;

GatewayConfig GatewayConfig::offline_defaults() {
    GatewayConfig cfg;
    for (const char* name : {"mock-a", "mock-b", "mock-c"}) {
        JudgeSpec spec;
        spec.name = name;
        spec.endpoint = "";
        spec.model_id = "mock-v1";
        spec.max_in_flight = 8;
        spec.timeout = std::chrono::milliseconds(5000);
        spec.retry = RetryPolicy{2, std::chrono::milliseconds(10)};
        cfg.judges.push_back(std::move(spec));
    }
    return cfg;
}

JudgeGateway::JudgeGateway(GatewayConfig config) : config_(std::move(config)) {
    if (config_.judges.empty()) throw std::invalid_argument("no judges configured");
    for (const auto& spec : config_.judges) {
        if (spec.max_in_flight < 1)
            throw std::invalid_argument("judge '" + spec.name + "': max_in_flight must be >= 1");
        if (spec.retry.max_attempts < 1)
            throw std::invalid_argument("judge '" + spec.name + "': max_attempts must be >= 1");
        auto pj = std::make_unique<PerJudge>();
        pj->spec = spec;
        pj->transport = spec.endpoint.empty() || spec.endpoint == "mock"
                            ? std::shared_ptr<Transport>(std::make_shared<MockTransport>())
                            : std::make_shared<HttpTransport>();
        pj->gate = std::make_unique<Gate>(spec.max_in_flight);
        if (!judges_.emplace(spec.name, std::move(pj)).second)
            throw std::invalid_argument("duplicate judge name '" + spec.name + "'");
    }
    for (const auto& [id, body] : builtin_templates()) templates_[id] = body;
    if (!config_.templates_dir.empty() && fs::is_directory(config_.templates_dir)) {
        for (const auto& entry : fs::directory_iterator(config_.templates_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            std::ifstream in(entry.path());
            std::ostringstream body;
            body << in.rdbuf();
            templates_[entry.path().stem().string()] = body.str();
        }
    }
    if (!config_.cache_dir.empty()) fs::create_directories(config_.cache_dir);
}

const JudgeSpec& JudgeGateway::spec(const std::string& judge_name) const {
    auto it = judges_.find(judge_name);
    if (it == judges_.end())
        throw std::runtime_error("judge '" + judge_name + "' not configured");
    return it->second->spec;
}

void JudgeGateway::set_transport(const std::string& judge_name,
                                 std::shared_ptr<Transport> transport) {
    auto it = judges_.find(judge_name);
    if (it == judges_.end())
        throw std::runtime_error("judge '" + judge_name + "' not configured");
    it->second->transport = std::move(transport);
}

void JudgeGateway::force_mock() {
    for (auto& [name, pj] : judges_) pj->transport = std::make_shared<MockTransport>();
}

void JudgeGateway::register_template(const std::string& id, std::string body) {
    templates_[id] = std::move(body);
}

bool JudgeGateway::has_template(const std::string& id) const {
    return templates_.count(id) > 0;
}

std::string JudgeGateway::render(const std::string& template_id,
                                 const std::map<std::string, std::string>& variables) const {
    auto it = templates_.find(template_id);
    if (it == templates_.end())
        throw std::runtime_error("template '" + template_id + "' not registered");
    const std::string& body = it->second;
    std::string out;
    out.reserve(body.size());
    size_t pos = 0;
    while (pos < body.size()) {
        size_t open = body.find("{{", pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        size_t close = body.find("}}", open + 2);
        if (close == std::string::npos)
            throw std::runtime_error("template '" + template_id + "': unterminated placeholder");
        const std::string name = body.substr(open + 2, close - open - 2);
        auto var = variables.find(name);
        if (var == variables.end())
            throw std::runtime_error("template '" + template_id + "': placeholder '" + name +
                                     "' not bound");
        out += var->second;  // substituted values are not rescanned
        pos = close + 2;
    }
    return out;
}

std::string JudgeGateway::cache_key(const JudgeSpec& spec, const std::string& prompt,
                                    DecodeKind decode) const {
    std::string material;
    material += spec.name;
    material += '\x1f';
    material += spec.model_id;
    material += '\x1f';
    material += to_string(decode);
    material += '\x1f';
    material += prompt;
    return sha256_hex(material);
}

std::optional<std::string> JudgeGateway::cache_lookup(const std::string& key) const {
    {
        std::lock_guard lock(mem_cache_mutex_);
        auto it = mem_cache_.find(key);
        if (it != mem_cache_.end()) return it->second;
    }
    if (config_.cache_dir.empty()) return std::nullopt;
    const fs::path file = fs::path(config_.cache_dir) / (key + ".json");
    std::ifstream in(file);
    if (!in) return std::nullopt;
    try {
        json j;
        in >> j;
        std::string raw = j.at("raw_text").get<std::string>();
        std::lock_guard lock(mem_cache_mutex_);
        mem_cache_[key] = raw;
        return raw;
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable cache entries fall through to a fresh call
    }
}

void JudgeGateway::cache_store(const std::string& key, const JudgeSpec& spec,
                               const std::string& prompt, DecodeKind decode,
                               const std::string& raw) const {
    {
        std::lock_guard lock(mem_cache_mutex_);
        mem_cache_[key] = raw;
    }
    if (config_.cache_dir.empty()) return;
    json j;
    j["judge"] = spec.name;
    j["model_id"] = spec.model_id;
    j["decode"] = std::string(to_string(decode));
    j["prompt_sha256"] = sha256_hex(prompt);
    j["raw_text"] = raw;
    static std::atomic<uint64_t> tmp_counter{0};
    const fs::path dir(config_.cache_dir);
    const fs::path tmp = dir / (key + ".tmp." + std::to_string(tmp_counter.fetch_add(1)));
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write cache entry " + tmp.string());
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, dir / (key + ".json"));
}

JudgeVerdict JudgeGateway::invoke(const JudgeRequest& req) {
    auto it = judges_.find(req.judge);
    if (it == judges_.end())
        throw std::runtime_error("judge '" + req.judge + "' not configured");
    PerJudge& pj = *it->second;
    const std::string prompt = render(req.template_id, req.variables);
    const std::string key = cache_key(pj.spec, prompt, req.decode);

    if (auto raw = cache_lookup(key)) {
        JudgeVerdict v;
        v.raw_text = *raw;
        v.decoded = decode_verdict(req.decode, *raw);
        v.cache_hit = true;
        v.attempts = 0;
        return v;
    }

    std::string raw;
    std::string last_error;
    int attempts = 0;
    bool ok = false;
    for (attempts = 1; attempts <= pj.spec.retry.max_attempts; ++attempts) {
        try {
            GateGuard guard(*pj.gate);
            raw = pj.transport->complete(pj.spec, prompt, req.decode);
            ok = true;
            break;
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempts < pj.spec.retry.max_attempts) {
                // backoff_base * 2^(attempt-1), jittered by +-20%
                Rng jitter(mix64(fnv1a64(key), static_cast<uint64_t>(attempts)));
                const double scale = (1 << (attempts - 1)) * jitter.uniform(0.8, 1.2);
                const auto delay = std::chrono::duration_cast<std::chrono::milliseconds>(
                    pj.spec.retry.backoff_base * scale);
                std::this_thread::sleep_for(delay);
            }
        }
    }
    if (!ok)
        throw TransportError("judge '" + req.judge + "': all " +
                             std::to_string(pj.spec.retry.max_attempts) +
                             " attempts failed; last error: " + last_error);

    JudgeVerdict v;
    v.raw_text = raw;
    v.decoded = decode_verdict(req.decode, raw);  // ParseError propagates, uncached
    v.cache_hit = false;
    v.attempts = attempts;
    cache_store(key, pj.spec, prompt, req.decode, raw);
    return v;
}

std::vector<JudgeGateway::BatchItem> JudgeGateway::invoke_batch(
    const std::vector<JudgeRequest>& reqs) {
    std::vector<BatchItem> results(reqs.size());
    if (reqs.empty()) return results;

    int capacity = 0;
    for (const auto& [name, pj] : judges_) capacity += pj->spec.max_in_flight;
    const size_t workers =
        std::min<size_t>({reqs.size(), static_cast<size_t>(std::max(capacity, 1)), 64});

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= reqs.size()) return;
            try {
                results[i].verdict = invoke(reqs[i]);
            } catch (const ParseError& e) {
                results[i].error = std::string("parse error: ") + e.what();
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace logos
