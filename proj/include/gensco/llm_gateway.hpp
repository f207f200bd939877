#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace gensco {

struct GeneratorRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_output_tokens = 64;
    std::vector<std::string> stop_sequences;
};

struct ScorerRequest {
    std::string prompt;
    /// Token sequence whose likelihood is read; must be non-empty.
    std::string continuation;
};

struct ScorerResponse {
    std::vector<double> token_logprobs;
    double mean_nll = 0.0;

    double sum_nll() const { return mean_nll * static_cast<double>(token_logprobs.size()); }

    /// Builds a response, computing mean_nll = -sum/count. Throws
    /// LogprobsUnsupported on an empty list or non-finite entries.
    static ScorerResponse from_logprobs(std::vector<double> token_logprobs);

    bool operator==(const ScorerResponse&) const = default;
};

enum class Role { Generator, Scorer };

/// What a call is for; only used to break down counters.
enum class CallPurpose { Decomposition, Answer, Relevance, StopCriterion };

std::string_view to_string(Role r);
std::string_view to_string(CallPurpose p);

struct LlmExchange {
    Role role = Role::Generator;
    CallPurpose purpose = CallPurpose::Answer;
    nlohmann::json request;
    nlohmann::json response;
    std::string cache_key;
    std::chrono::microseconds latency{0};
    bool from_cache = false;
};

/// A text-completion endpoint that may also be able to score continuations.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Stable identifier folded into cache keys (e.g. "http:<url>|<model>").
    virtual std::string id() const = 0;

    /// Raw completion text. Throws TransportError for retryable failures.
    virtual std::string complete(const GeneratorRequest& req) = 0;

    /// Natural-log probabilities of each continuation token given the prompt.
    virtual std::vector<double> continuation_logprobs(const ScorerRequest& req) = 0;

    /// Longest prompt the backend accepts, in characters; nullopt = unknown.
    virtual std::optional<std::size_t> max_prompt_chars() const { return std::nullopt; }
};

/// Content-addressed response store.
class ResponseCache {
public:
    virtual ~ResponseCache() = default;
    virtual std::optional<nlohmann::json> get(const std::string& key) = 0;
    /// First write wins: a key that already holds a value is left unchanged.
    virtual void put(const std::string& key, const nlohmann::json& value) = 0;
};

class MemoryCache final : public ResponseCache {
public:
    std::optional<nlohmann::json> get(const std::string& key) override;
    void put(const std::string& key, const nlohmann::json& value) override;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, nlohmann::json> store_;
};

/// One file per key under `<dir>/<first two hex chars>/<key>.json`; files are
/// written atomically so a crash never leaves a torn entry.
class DiskCache final : public ResponseCache {
public:
    explicit DiskCache(std::string dir);
    std::optional<nlohmann::json> get(const std::string& key) override;
    void put(const std::string& key, const nlohmann::json& value) override;

private:
    std::string path_for(const std::string& key) const;
    std::mutex& lock_for(const std::string& key);

    std::string dir_;
    std::array<std::mutex, 64> stripes_;
};

struct PurposeCounters {
    long requests = 0;
    long cache_hits = 0;
    long backend_calls = 0;

    bool operator==(const PurposeCounters&) const = default;
};

struct CallCounters {
    std::map<CallPurpose, PurposeCounters> by_purpose;

    long requests(Role role) const;
    long cache_hits() const;
    long cache_misses() const;
    long backend_calls() const;
    nlohmann::json to_json() const;
    static CallCounters from_json(const nlohmann::json& j);
    CallCounters& operator+=(const CallCounters& other);
};

struct GatewayOptions {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{200};
    /// Global bound on concurrent backend calls across both roles.
    int max_in_flight = 8;
};

/// Front door for both roles: cache lookup, bounded retries on transport
/// errors, in-flight throttling, per-purpose counters and an optional
/// exchange sink. Safe for concurrent use.
class LlmGateway {
public:
    LlmGateway(std::shared_ptr<LlmBackend> generator, std::shared_ptr<LlmBackend> scorer,
               std::shared_ptr<ResponseCache> cache, GatewayOptions options = {});

    /// Completion truncated at the first stop sequence.
    std::string generate(const GeneratorRequest& req, CallPurpose purpose = CallPurpose::Answer);
    ScorerResponse score_continuation(const ScorerRequest& req,
                                      CallPurpose purpose = CallPurpose::Relevance);

    /// Same as the above but also reports the exchange record.
    std::string generate(const GeneratorRequest& req, CallPurpose purpose, LlmExchange* exchange);
    ScorerResponse score_continuation(const ScorerRequest& req, CallPurpose purpose, LlmExchange* exchange);

    CallCounters counters() const;
    void set_exchange_sink(std::function<void(const LlmExchange&)> sink);

    const LlmBackend& generator_backend() const { return *generator_; }
    const LlmBackend& scorer_backend() const { return *scorer_; }

    static std::string cache_key(const std::string& backend_id, Role role, const nlohmann::json& request);

private:
    nlohmann::json call_with_retries(Role role, const std::function<nlohmann::json()>& fn);
    void count(CallPurpose purpose, bool hit);
    void emit(const LlmExchange& ex);

    std::shared_ptr<LlmBackend> generator_;
    std::shared_ptr<LlmBackend> scorer_;
    std::shared_ptr<ResponseCache> cache_;
    GatewayOptions options_;
    std::counting_semaphore<> in_flight_;

    mutable std::mutex mu_;
    CallCounters counters_;
    std::function<void(const LlmExchange&)> sink_;
};

/// Cuts `text` at the earliest occurrence of any stop sequence.
std::string truncate_at_stop(const std::string& text, const std::vector<std::string>& stops);

nlohmann::json to_json(const GeneratorRequest& r);
nlohmann::json to_json(const ScorerRequest& r);

} // namespace gensco
