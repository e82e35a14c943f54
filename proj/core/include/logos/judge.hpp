#pragma once

#include <array>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "logos/dataset.hpp"

namespace logos {

// ============================================================================
// Specs and requests
// ============================================================================

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{250};
};

struct JudgeSpec {
    std::string name;
    std::string endpoint;   // empty for the built-in mock
    std::string model_id;
    int max_in_flight = 4;
    std::chrono::milliseconds timeout{30000};
    RetryPolicy retry;
    std::string api_key_env;  // name of env var holding the bearer token
};

enum class DecodeKind {
    matching_vectors,
    type_flags,
    dimension_scores,
    free_text,
    class_label,
};

std::string_view to_string(DecodeKind k);

struct JudgeRequest {
    std::string template_id;
    std::map<std::string, std::string> variables;
    std::string judge;  // JudgeSpec name
    DecodeKind decode = DecodeKind::free_text;
};

// Binary coverage vectors over predicted and ground-truth items.
struct MatchingVectors {
    std::vector<int> pred;  // M_pred: pred[i] == 1 iff predicted item i is covered
    std::vector<int> gt;    // M_gt:   gt[j]   == 1 iff ground-truth item j is stated
};

struct TypeFlags {
    std::set<HallucinationType> types;
};

// Five scores, each normalized to [0, 1]:
// factual accuracy, logical consistency, reasoning completeness,
// conceptual accuracy, strategy appropriateness.
struct DimensionScores {
    std::array<double, 5> s{};

    double mean() const { return (s[0] + s[1] + s[2] + s[3] + s[4]) / 5.0; }
};

inline constexpr std::array<const char*, 5> kDimensionNames = {
    "factual", "logical", "completeness", "conceptual", "strategy",
};

using DecodedVerdict =
    std::variant<std::string, MatchingVectors, TypeFlags, DimensionScores, Topic>;

struct JudgeVerdict {
    std::string raw_text;
    DecodedVerdict decoded;
    bool cache_hit = false;
    int attempts = 0;
};

// ============================================================================
// Errors
// ============================================================================

// All attempts against a judge endpoint failed.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The judge answered but the reply does not decode under the requested kind.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::string raw)
        : std::runtime_error(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

// ============================================================================
// Decoding (strict grammar first, regex fallback, error third)
// ============================================================================

MatchingVectors decode_matching_vectors(const std::string& raw);
TypeFlags decode_type_flags(const std::string& raw);
DimensionScores decode_dimension_scores(const std::string& raw);
Topic decode_class_label(const std::string& raw);
DecodedVerdict decode_verdict(DecodeKind kind, const std::string& raw);

// ============================================================================
// Transports
// ============================================================================

class Transport {
public:
    virtual ~Transport() = default;
    // Sends one completion request; throws TransportError on failure.
    virtual std::string complete(const JudgeSpec& spec, const std::string& prompt,
                                 DecodeKind decode) = 0;
};

// Deterministic offline judge: the reply is a pure function of the rendered
// prompt and decode kind, so repeated evaluations are byte-identical.
std::string mock_response(const std::string& rendered_prompt, DecodeKind decode);

class MockTransport : public Transport {
public:
    std::string complete(const JudgeSpec&, const std::string& prompt,
                         DecodeKind decode) override {
        return mock_response(prompt, decode);
    }
};

// Chat-completion HTTP transport. POSTs
//   {"model": <model_id>, "messages": [{"role":"user","content": <prompt>}],
//    "temperature": 0}
// to the spec endpoint and returns choices[0].message.content.
class HttpTransport : public Transport {
public:
    std::string complete(const JudgeSpec& spec, const std::string& prompt,
                         DecodeKind decode) override;
};

// ============================================================================
// Prompt payload fences
// ============================================================================

// Variable payloads are fenced inside templates so both live judges and the
// mock can recover them verbatim.
inline constexpr const char* kPayloadOpen = "<<<";
inline constexpr const char* kPayloadClose = ">>>";

std::string fence_payload(const std::string& text);
// Extracts the n-th fenced payload from a rendered prompt, if present.
std::optional<std::string> extract_payload(const std::string& rendered, int index = 0);

// ============================================================================
// Gateway
// ============================================================================

struct JudgeRoles {
    std::string extractor = "mock-a";
    std::string matcher = "mock-a";
    std::string detector = "mock-a";
    std::string rewriter = "mock-a";
    std::string classifier = "mock-a";
    std::string hinter = "mock-a";
    std::string verifier = "mock-a";
    std::vector<std::string> scorers = {"mock-a", "mock-b", "mock-c"};  // the LHS M-set
};

struct GatewayConfig {
    std::vector<JudgeSpec> judges;
    std::string templates_dir;  // optional; built-in templates used when empty
    std::string cache_dir;      // optional; caching disabled when empty
    JudgeRoles roles;

    // Three mock judges wired to every role; M = 3 for LHS.
    static GatewayConfig offline_defaults();
};

class JudgeGateway {
public:
    explicit JudgeGateway(GatewayConfig config);
    ~JudgeGateway();
    JudgeGateway(const JudgeGateway&) = delete;
    JudgeGateway& operator=(const JudgeGateway&) = delete;

    const GatewayConfig& config() const { return config_; }
    const JudgeSpec& spec(const std::string& judge_name) const;

    // Replaces the transport for one judge (tests inject instrumented or
    // failure-injecting transports here).
    void set_transport(const std::string& judge_name, std::shared_ptr<Transport> transport);
    // Forces every judge onto the mock transport regardless of endpoint.
    void force_mock();

    void register_template(const std::string& id, std::string body);
    bool has_template(const std::string& id) const;
    // Renders a template; throws if a placeholder stays unbound.
    std::string render(const std::string& template_id,
                       const std::map<std::string, std::string>& variables) const;

    JudgeVerdict invoke(const JudgeRequest& req);

    struct BatchItem {
        std::optional<JudgeVerdict> verdict;
        std::string error;  // nonempty iff verdict is absent
        bool ok() const { return verdict.has_value(); }
    };
    // Positionally aligned with reqs; per-item failures never abort the batch.
    // At most spec.max_in_flight transport calls are outstanding per judge.
    std::vector<BatchItem> invoke_batch(const std::vector<JudgeRequest>& reqs);

private:
    struct PerJudge;

    std::string cache_key(const JudgeSpec& spec, const std::string& prompt,
                          DecodeKind decode) const;
    std::optional<std::string> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const JudgeSpec& spec,
                     const std::string& prompt, DecodeKind decode,
                     const std::string& raw) const;

    GatewayConfig config_;
    std::map<std::string, std::string> templates_;
    std::map<std::string, std::unique_ptr<PerJudge>> judges_;
    mutable std::mutex mem_cache_mutex_;
    mutable std::map<std::string, std::string> mem_cache_;  // key -> raw_text
};

// sha256 hex digest; cache keys and report fingerprints are content-addressed.
std::string sha256_hex(std::string_view data);

// Built-in template bodies (also written out by the CLI for user editing).
const std::map<std::string, std::string>& builtin_templates();

}  // namespace logos
