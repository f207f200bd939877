#include "gensco/llm_gateway.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace gensco {

using nlohmann::json;

std::string_view to_string(Role r) { return r == Role::Generator ? "generator" : "scorer"; }

std::string_view to_string(CallPurpose p) {
    switch (p) {
    case CallPurpose::Decomposition: return "decomposition";
    case CallPurpose::Answer: return "answer";
    case CallPurpose::Relevance: return "relevance";
    case CallPurpose::StopCriterion: return "stop_criterion";
    }
    return "answer";
}

namespace {

Role role_of(CallPurpose p) {
    return (p == CallPurpose::Decomposition || p == CallPurpose::Answer) ? Role::Generator : Role::Scorer;
}

CallPurpose parse_purpose(std::string_view s) {
    for (auto p : {CallPurpose::Decomposition, CallPurpose::Answer, CallPurpose::Relevance,
                   CallPurpose::StopCriterion}) {
        if (to_string(p) == s) return p;
    }
    throw Error(ErrorCode::CorruptTrace, "unknown call purpose '" + std::string(s) + "'");
}

} // namespace

ScorerResponse ScorerResponse::from_logprobs(std::vector<double> token_logprobs) {
    if (token_logprobs.empty()) {
        throw Error(ErrorCode::LogprobsUnsupported, "backend returned no continuation token log-probabilities");
    }
    double sum = 0.0;
    for (double lp : token_logprobs) {
        if (!std::isfinite(lp)) throw Error(ErrorCode::LogprobsUnsupported, "non-finite token log-probability");
        sum += lp;
    }
    ScorerResponse r;
    r.mean_nll = -sum / static_cast<double>(token_logprobs.size());
    r.token_logprobs = std::move(token_logprobs);
    return r;
}

json to_json(const GeneratorRequest& r) {
    return json{{"prompt", r.prompt},
                {"temperature", r.temperature},
                {"max_output_tokens", r.max_output_tokens},
                {"stop_sequences", r.stop_sequences}};
}

json to_json(const ScorerRequest& r) { return json{{"prompt", r.prompt}, {"continuation", r.continuation}}; }

std::string truncate_at_stop(const std::string& text, const std::vector<std::string>& stops) {
    std::size_t cut = text.size();
    for (const auto& s : stops) {
        if (s.empty()) continue;
        auto pos = text.find(s);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    return text.substr(0, cut);
}

// ---------------------------------------------------------------------------
// caches

std::optional<json> MemoryCache::get(const std::string& key) {
    std::lock_guard lock(mu_);
    auto it = store_.find(key);
    if (it == store_.end()) return std::nullopt;
    return it->second;
}

void MemoryCache::put(const std::string& key, const json& value) {
    std::lock_guard lock(mu_);
    store_.emplace(key, value);
}

std::size_t MemoryCache::size() const {
    std::lock_guard lock(mu_);
    return store_.size();
}

DiskCache::DiskCache(std::string dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::string DiskCache::path_for(const std::string& key) const {
    return dir_ + "/" + key.substr(0, 2) + "/" + key + ".json";
}

std::mutex& DiskCache::lock_for(const std::string& key) {
    return stripes_[std::hash<std::string>{}(key) % stripes_.size()];
}

std::optional<json> DiskCache::get(const std::string& key) {
    std::lock_guard lock(lock_for(key));
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    auto parsed = json::parse(ss.str(), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

void DiskCache::put(const std::string& key, const json& value) {
    std::lock_guard lock(lock_for(key));
    auto path = path_for(key);
    if (std::filesystem::exists(path)) return;
    write_file_atomic(path, value.dump());
}

// ---------------------------------------------------------------------------
// counters

long CallCounters::requests(Role role) const {
    long n = 0;
    for (const auto& [p, c] : by_purpose) {
        if (role_of(p) == role) n += c.requests;
    }
    return n;
}

long CallCounters::cache_hits() const {
    long n = 0;
    for (const auto& [p, c] : by_purpose) n += c.cache_hits;
    return n;
}

long CallCounters::cache_misses() const {
    long n = 0;
    for (const auto& [p, c] : by_purpose) n += c.requests - c.cache_hits;
    return n;
}

long CallCounters::backend_calls() const {
    long n = 0;
    for (const auto& [p, c] : by_purpose) n += c.backend_calls;
    return n;
}

json CallCounters::to_json() const {
    json by = json::object();
    for (auto p : {CallPurpose::Decomposition, CallPurpose::Answer, CallPurpose::Relevance,
                   CallPurpose::StopCriterion}) {
        auto it = by_purpose.find(p);
        PurposeCounters c = it == by_purpose.end() ? PurposeCounters{} : it->second;
        by[std::string(to_string(p))] = {
            {"requests", c.requests}, {"cache_hits", c.cache_hits}, {"backend_calls", c.backend_calls}};
    }
    return json{{"by_purpose", by},
                {"generator_requests", requests(Role::Generator)},
                {"scorer_requests", requests(Role::Scorer)},
                {"cache_hits", cache_hits()},
                {"cache_misses", cache_misses()},
                {"backend_calls", backend_calls()}};
}

CallCounters CallCounters::from_json(const json& j) {
    CallCounters c;
    for (const auto& [name, v] : j.at("by_purpose").items()) {
        PurposeCounters pc;
        pc.requests = v.at("requests").get<long>();
        pc.cache_hits = v.at("cache_hits").get<long>();
        pc.backend_calls = v.at("backend_calls").get<long>();
        c.by_purpose[parse_purpose(name)] = pc;
    }
    return c;
}

CallCounters& CallCounters::operator+=(const CallCounters& other) {
    for (const auto& [p, c] : other.by_purpose) {
        auto& mine = by_purpose[p];
        mine.requests += c.requests;
        mine.cache_hits += c.cache_hits;
        mine.backend_calls += c.backend_calls;
    }
    return *this;
}

// ---------------------------------------------------------------------------
// gateway

LlmGateway::LlmGateway(std::shared_ptr<LlmBackend> generator, std::shared_ptr<LlmBackend> scorer,
                       std::shared_ptr<ResponseCache> cache, GatewayOptions options)
    : generator_(std::move(generator)),
      scorer_(std::move(scorer)),
      cache_(std::move(cache)),
      options_(options),
      in_flight_(std::max(1, options.max_in_flight)) {
    if (!generator_ || !scorer_) throw Error(ErrorCode::ConfigError, "gateway needs both a generator and a scorer");
    if (options_.max_attempts < 1) options_.max_attempts = 1;
}

std::string LlmGateway::cache_key(const std::string& backend_id, Role role, const json& request) {
    const std::string role_name(to_string(role));
    const std::string body = request.dump();
    const std::string_view fields[] = {backend_id, role_name, body};
    return digest_fields(fields);
}

json LlmGateway::call_with_retries(Role role, const std::function<json()>& fn) {
    auto delay = options_.backoff_base;
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        in_flight_.acquire();
        try {
            json out = fn();
            in_flight_.release();
            return out;
        } catch (const TransportError& e) {
            in_flight_.release();
            last_error = e.what();
        } catch (...) {
            in_flight_.release();
            throw;
        }
        if (attempt < options_.max_attempts) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    throw Error(ErrorCode::BackendUnavailable, std::string(to_string(role)) + " backend failed after " +
                                                   std::to_string(options_.max_attempts) +
                                                   " attempts: " + last_error);
}

void LlmGateway::count(CallPurpose purpose, bool hit) {
    std::lock_guard lock(mu_);
    auto& c = counters_.by_purpose[purpose];
    ++c.requests;
    if (hit) {
        ++c.cache_hits;
    } else {
        ++c.backend_calls;
    }
}

void LlmGateway::emit(const LlmExchange& ex) {
    std::function<void(const LlmExchange&)> sink;
    {
        std::lock_guard lock(mu_);
        sink = sink_;
    }
    if (sink) sink(ex);
}

CallCounters LlmGateway::counters() const {
    std::lock_guard lock(mu_);
    return counters_;
}

void LlmGateway::set_exchange_sink(std::function<void(const LlmExchange&)> sink) {
    std::lock_guard lock(mu_);
    sink_ = std::move(sink);
}

std::string LlmGateway::generate(const GeneratorRequest& req, CallPurpose purpose) {
    return generate(req, purpose, nullptr);
}

ScorerResponse LlmGateway::score_continuation(const ScorerRequest& req, CallPurpose purpose) {
    return score_continuation(req, purpose, nullptr);
}

std::string LlmGateway::generate(const GeneratorRequest& req, CallPurpose purpose, LlmExchange* exchange) {
    if (req.prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty generator prompt");
    const auto start = std::chrono::steady_clock::now();
    const json request = to_json(req);
    const std::string key = cache_key(generator_->id(), Role::Generator, request);

    std::optional<json> cached = cache_ ? cache_->get(key) : std::nullopt;
    const bool hit = cached.has_value();
    json response;
    if (hit) {
        response = *cached;
    } else {
        if (auto limit = generator_->max_prompt_chars(); limit && utf8_length(req.prompt) > *limit) {
            throw Error(ErrorCode::ContextOverflow, "prompt of " + std::to_string(utf8_length(req.prompt)) +
                                                        " chars exceeds generator limit " +
                                                        std::to_string(*limit));
        }
        response = call_with_retries(Role::Generator, [&] { return json{{"text", generator_->complete(req)}}; });
        if (cache_) {
            cache_->put(key, response);
            if (auto stored = cache_->get(key)) response = *stored;
        }
    }
    count(purpose, hit);

    LlmExchange ex{Role::Generator, purpose, request, response, key,
                   std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start),
                   hit};
    emit(ex);
    if (exchange) *exchange = ex;
    return truncate_at_stop(response.at("text").get<std::string>(), req.stop_sequences);
}

ScorerResponse LlmGateway::score_continuation(const ScorerRequest& req, CallPurpose purpose,
                                              LlmExchange* exchange) {
    if (req.continuation.empty()) throw Error(ErrorCode::InvalidArgument, "empty continuation to score");
    const auto start = std::chrono::steady_clock::now();
    const json request = to_json(req);
    const std::string key = cache_key(scorer_->id(), Role::Scorer, request);

    std::optional<json> cached = cache_ ? cache_->get(key) : std::nullopt;
    const bool hit = cached.has_value();
    json response;
    if (hit) {
        response = *cached;
    } else {
        if (auto limit = scorer_->max_prompt_chars();
            limit && utf8_length(req.prompt) + utf8_length(req.continuation) > *limit) {
            throw Error(ErrorCode::ContextOverflow, "scoring prompt exceeds scorer limit " + std::to_string(*limit));
        }
        response = call_with_retries(Role::Scorer, [&] {
            return json{{"token_logprobs", scorer_->continuation_logprobs(req)}};
        });
        // validate before caching so a bad payload is never persisted
        (void)ScorerResponse::from_logprobs(response.at("token_logprobs").get<std::vector<double>>());
        if (cache_) {
            cache_->put(key, response);
            if (auto stored = cache_->get(key)) response = *stored;
        }
    }
    count(purpose, hit);

    auto result = ScorerResponse::from_logprobs(response.at("token_logprobs").get<std::vector<double>>());
    LlmExchange ex{Role::Scorer, purpose, request, response, key,
                   std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start),
                   hit};
    emit(ex);
    if (exchange) *exchange = ex;
    return result;
}

} // namespace gensco
