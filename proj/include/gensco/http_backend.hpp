#pragma once

#include "gensco/llm_gateway.hpp"

#include <chrono>
#include <optional>
#include <string>

namespace gensco {

struct HttpBackendConfig {
    /// Base URL including the API prefix, e.g. "http://localhost:8000/v1".
    std::string base_url;
    std::string model;
    std::string api_key;
    std::chrono::seconds timeout{120};
    /// Tokens requested alongside an echoed scoring prompt. Some servers
    /// reject 0; generated tokens are filtered out by offset either way.
    int scorer_max_tokens = 1;
    std::optional<std::size_t> max_prompt_chars;
};

/// Client for OpenAI-compatible `/completions` endpoints. Generation uses the
/// plain completion call; scoring sends prompt+continuation with echo and
/// logprobs enabled and keeps the tokens whose text offsets fall inside the
/// continuation.
class HttpCompletionBackend final : public LlmBackend {
public:
    explicit HttpCompletionBackend(HttpBackendConfig config);
    ~HttpCompletionBackend() override;

    std::string id() const override;
    std::string complete(const GeneratorRequest& req) override;
    std::vector<double> continuation_logprobs(const ScorerRequest& req) override;
    std::optional<std::size_t> max_prompt_chars() const override { return config_.max_prompt_chars; }

private:
    nlohmann::json post(const nlohmann::json& body);

    HttpBackendConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

/// Picks the continuation tokens out of an echoed `logprobs` block.
/// `prompt_chars`/`continuation_chars` are code-point lengths. Throws
/// LogprobsUnsupported when the block is missing or malformed.
std::vector<double> extract_continuation_logprobs(const nlohmann::json& logprobs, std::size_t prompt_chars,
                                                  std::size_t continuation_chars);

} // namespace gensco
