#pragma once

#include "gensco/llm_gateway.hpp"

#include <map>
#include <string>
#include <vector>

namespace gensco {

/// Canned response for one request fingerprint.
struct ScriptEntry {
    Role role = Role::Generator;
    std::string fingerprint;
    std::string text;                   // generator entries
    std::vector<double> token_logprobs; // scorer entries
    std::string note;                   // free-form, ignored by lookup
};

/// Fingerprints cover exactly what the backend sees: the prompt for the
/// generator, prompt plus continuation for the scorer. Sampling parameters
/// are deliberately left out so scripts stay readable.
std::string generator_fingerprint(std::string_view prompt);
std::string scorer_fingerprint(std::string_view prompt, std::string_view continuation);

/// A fixed request->response table. Any request not in the table raises
/// ScriptMiss; there is no fallback.
class ScriptedBackend final : public LlmBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries, std::string name = "scripted");

    /// Reads a JSON-lines script. Each line is either
    ///   {"role":"generator","fingerprint":..., "text":...}
    ///   {"role":"scorer","fingerprint":..., "token_logprobs":[...]}
    /// and may give "prompt" (+ "continuation") instead of "fingerprint".
    static ScriptedBackend load(const std::string& path);

    std::string id() const override { return id_; }
    std::string complete(const GeneratorRequest& req) override;
    std::vector<double> continuation_logprobs(const ScorerRequest& req) override;
    std::optional<std::size_t> max_prompt_chars() const override { return max_prompt_chars_; }

    void set_max_prompt_chars(std::optional<std::size_t> limit) { max_prompt_chars_ = limit; }
    std::size_t size() const { return generator_.size() + scorer_.size(); }

private:
    std::string id_;
    std::map<std::string, std::string> generator_;
    std::map<std::string, std::vector<double>> scorer_;
    std::optional<std::size_t> max_prompt_chars_;
};

nlohmann::json to_json(const ScriptEntry& e);
ScriptEntry script_entry_from_json(const nlohmann::json& j);

/// Serialises entries as JSON lines, sorted by (role, fingerprint) so equal
/// scripts produce equal files.
std::string write_script(std::vector<ScriptEntry> entries);

} // namespace gensco
