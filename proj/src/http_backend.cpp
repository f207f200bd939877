#include "gensco/http_backend.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <httplib.h>

namespace gensco {

using nlohmann::json;

namespace {

bool mentions_context_limit(const std::string& body) {
    auto lower = ascii_lower(body);
    return lower.find("context length") != std::string::npos ||
           lower.find("maximum context") != std::string::npos ||
           lower.find("context window") != std::string::npos ||
           lower.find("too many tokens") != std::string::npos;
}

} // namespace

HttpCompletionBackend::HttpCompletionBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "backend url '" + url + "' has no scheme");
    }
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (config_.model.empty()) throw Error(ErrorCode::ConfigError, "backend model is required");
}

HttpCompletionBackend::~HttpCompletionBackend() = default;

std::string HttpCompletionBackend::id() const { return "http:" + config_.base_url + "|" + config_.model; }

json HttpCompletionBackend::post(const json& body) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(path_prefix_ + "/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    if (res->status == 400 && mentions_context_limit(res->body)) {
        throw Error(ErrorCode::ContextOverflow, res->body.substr(0, 300));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::BackendUnavailable,
                    "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
    }
    auto parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
        throw Error(ErrorCode::BackendUnavailable, "malformed completion response");
    }
    return parsed;
}

std::string HttpCompletionBackend::complete(const GeneratorRequest& req) {
    json body{{"model", config_.model},
              {"prompt", req.prompt},
              {"temperature", req.temperature},
              {"max_tokens", req.max_output_tokens}};
    if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
    auto res = post(body);
    const auto& choice = res["choices"][0];
    if (!choice.contains("text") || !choice["text"].is_string()) {
        throw Error(ErrorCode::BackendUnavailable, "completion response without text");
    }
    return choice["text"].get<std::string>();
}

std::vector<double> extract_continuation_logprobs(const json& logprobs, std::size_t prompt_chars,
                                                  std::size_t continuation_chars) {
    if (!logprobs.is_object() || !logprobs.contains("tokens") || !logprobs.contains("token_logprobs")) {
        throw Error(ErrorCode::LogprobsUnsupported, "response carries no echoed token log-probabilities");
    }
    const auto& tokens = logprobs["tokens"];
    const auto& lps = logprobs["token_logprobs"];
    if (!tokens.is_array() || !lps.is_array() || tokens.size() != lps.size()) {
        throw Error(ErrorCode::LogprobsUnsupported, "tokens and token_logprobs disagree");
    }
    const bool has_offsets = logprobs.contains("text_offset") && logprobs["text_offset"].is_array() &&
                             logprobs["text_offset"].size() == tokens.size();
    const std::size_t begin = prompt_chars;
    const std::size_t end = prompt_chars + continuation_chars;

    std::vector<double> out;
    std::size_t running = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto tok = tokens[i].is_string() ? tokens[i].get<std::string>() : std::string();
        const std::size_t start = has_offsets ? logprobs["text_offset"][i].get<std::size_t>() : running;
        const std::size_t stop = start + utf8_length(tok);
        running = stop;
        // a token straddling the boundary carries continuation text, keep it
        if (stop <= begin || start >= end) continue;
        if (!lps[i].is_number()) throw Error(ErrorCode::LogprobsUnsupported, "null log-probability in continuation");
        out.push_back(lps[i].get<double>());
    }
    if (out.empty()) throw Error(ErrorCode::LogprobsUnsupported, "no tokens fell inside the continuation");
    return out;
}

std::vector<double> HttpCompletionBackend::continuation_logprobs(const ScorerRequest& req) {
    json body{{"model", config_.model},
              {"prompt", req.prompt + req.continuation},
              {"temperature", 0.0},
              {"max_tokens", config_.scorer_max_tokens},
              {"echo", true},
              {"logprobs", 1}};
    auto res = post(body);
    const auto& choice = res["choices"][0];
    if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
        throw Error(ErrorCode::LogprobsUnsupported, "endpoint did not return logprobs");
    }
    return extract_continuation_logprobs(choice["logprobs"], utf8_length(req.prompt),
                                         utf8_length(req.continuation));
}

} // namespace gensco
