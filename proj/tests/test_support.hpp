#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>

#include "logos/judge.hpp"
#include "logos/rng.hpp"

namespace test_support {

inline std::string data_path(const std::string& name) {
    return std::string(LOGOS_DATA_DIR) + "/" + name;
}

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<uint64_t> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("logos-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

// Transport backed by an arbitrary callable; scripted judges for tests.
class FunctionTransport : public logos::Transport {
public:
    using Fn = std::function<std::string(const logos::JudgeSpec&, const std::string&,
                                         logos::DecodeKind)>;
    explicit FunctionTransport(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const logos::JudgeSpec& spec, const std::string& prompt,
                         logos::DecodeKind decode) override {
        return fn_(spec, prompt, decode);
    }

private:
    Fn fn_;
};

inline std::shared_ptr<logos::Transport> scripted(FunctionTransport::Fn fn) {
    return std::make_shared<FunctionTransport>(std::move(fn));
}

// Transport that always answers with the same text.
inline std::shared_ptr<logos::Transport> fixed_reply(std::string reply) {
    return scripted([reply = std::move(reply)](const logos::JudgeSpec&, const std::string&,
                                               logos::DecodeKind) { return reply; });
}

// Decorator tracking in-flight calls; the sleep forces overlap so the peak
// is observable.
class CountingTransport : public logos::Transport {
public:
    CountingTransport(std::shared_ptr<logos::Transport> inner,
                      std::chrono::milliseconds delay = std::chrono::milliseconds(2))
        : inner_(std::move(inner)), delay_(delay) {}

    std::string complete(const logos::JudgeSpec& spec, const std::string& prompt,
                         logos::DecodeKind decode) override {
        const int now = in_flight_.fetch_add(1) + 1;
        int prev = peak_.load();
        while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(delay_);
        const std::string reply = inner_->complete(spec, prompt, decode);
        in_flight_.fetch_sub(1);
        calls_.fetch_add(1);
        return reply;
    }

    int peak() const { return peak_.load(); }
    int calls() const { return calls_.load(); }

private:
    std::shared_ptr<logos::Transport> inner_;
    std::chrono::milliseconds delay_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
    std::atomic<int> calls_{0};
};

// Gateway wired to a single mock judge named "mock-a" with no disk cache.
inline logos::GatewayConfig single_mock_config() {
    logos::GatewayConfig cfg;
    logos::JudgeSpec spec;
    spec.name = "mock-a";
    spec.model_id = "mock-v1";
    spec.max_in_flight = 8;
    spec.retry = logos::RetryPolicy{2, std::chrono::milliseconds(1)};
    cfg.judges.push_back(spec);
    cfg.roles.scorers = {"mock-a"};
    return cfg;
}

}  // namespace test_support
