#pragma once

#include "gensco/dataset.hpp"
#include "gensco/evaluation.hpp"
#include "gensco/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace gensco {

enum class MethodKind { GenSco, Bm25, RankingFile };

struct Method {
    MethodKind kind = MethodKind::GenSco;
    Variant variant = Variant::GenScoStop;
    std::string name() const;
    /// Variant names, "bm25" or "ranking-file".
    static Method parse(std::string_view s);
};

struct BackendConfig {
    /// "scripted" or "http"
    std::string type = "scripted";
    std::string url;
    std::string model;
    std::string script;
    std::optional<std::size_t> max_prompt_chars;
    std::string api_key; // filled from the environment, never serialised
};

/// Everything a run needs. Loaded from a JSON file; relative paths resolve
/// against the file's directory.
struct RunConfig {
    Method method;
    DatasetConfig dataset;
    std::string shots_file;
    std::string templates_dir;
    std::string cache_dir;
    std::string ranking_file;
    int concurrency = 1;
    int max_in_flight = 8;
    std::size_t top_k = 5;
    BackendConfig generator;
    BackendConfig scorer;
    EvalOptions eval;
    /// Explicit "pipeline" keys; merged over the dataset/variant defaults.
    nlohmann::json pipeline_keys = nlohmann::json::object();

    PipelineConfig pipeline() const;

    /// Throws ConfigError naming the offending field.
    static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
    static RunConfig load(const std::string& path);
    /// Snapshot for the manifest; credentials are omitted.
    nlohmann::json to_json() const;
};

/// Command-line overrides; unset fields leave the config alone.
struct RunOverrides {
    std::optional<std::string> dataset_path;
    std::optional<std::string> variant;
    std::optional<std::size_t> limit;
    std::optional<std::uint64_t> seed;
    std::optional<int> concurrency;
    std::optional<std::string> cache_dir;
    std::optional<std::string> generator_url;
    std::optional<std::string> scorer_url;
};

void apply_overrides(RunConfig& cfg, const RunOverrides& o);

/// Credentials: GENSCO_GENERATOR_API_KEY / GENSCO_SCORER_API_KEY, falling
/// back to OPENAI_API_KEY. Nothing else is read from the environment.
void load_credentials(RunConfig& cfg);

/// Throws ConfigError when a backend block lacks what its type needs.
void check_backend(const BackendConfig& b, const std::string& field);

} // namespace gensco
