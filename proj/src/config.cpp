#include "gensco/config.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

namespace gensco {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be reported by name.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error(ErrorCode::ConfigError, where() + " must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <typename T>
    std::optional<T> get(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return std::nullopt;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::ConfigError, "field '" + name(key) + "' has the wrong type");
        }
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (auto v = get<T>(key)) out = *v;
    }

    const json& object(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [k, _] : j_.items()) {
            if (!seen_.count(k)) throw Error(ErrorCode::ConfigError, "unknown field '" + name(k) + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : "field '" + path_ + "'"; }
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path path(p);
    if (path.is_relative()) path = fs::path(base) / path;
    return fs::absolute(path).lexically_normal().string();
}

BackendConfig backend_from_json(const json& j, const std::string& field, const std::string& base) {
    Fields f(j, field);
    BackendConfig b;
    f.read("type", b.type);
    f.read("url", b.url);
    f.read("model", b.model);
    f.read("script", b.script);
    if (auto m = f.get<std::size_t>("max_prompt_chars")) b.max_prompt_chars = *m;
    f.finish();
    if (b.type != "scripted" && b.type != "http") {
        throw Error(ErrorCode::ConfigError, "field '" + field + ".type' must be \"scripted\" or \"http\"");
    }
    b.script = resolve(base, b.script);
    return b;
}

json backend_to_json(const BackendConfig& b) {
    json j{{"type", b.type}};
    if (!b.url.empty()) j["url"] = b.url;
    if (!b.model.empty()) j["model"] = b.model;
    if (!b.script.empty()) j["script"] = b.script;
    if (b.max_prompt_chars) j["max_prompt_chars"] = *b.max_prompt_chars;
    return j;
}

const std::set<std::string> kPipelineKeys{"max_levels",       "shots",           "temperature",
                                          "dedupe_pool",      "score_sign",      "length_normalize",
                                          "parallel_scoring", "shuffle_context", "shuffle_seed",
                                          "decomposition_max_tokens", "answer_max_tokens"};

} // namespace

std::string Method::name() const {
    switch (kind) {
    case MethodKind::GenSco: return std::string(to_string(variant));
    case MethodKind::Bm25: return "bm25";
    case MethodKind::RankingFile: return "ranking-file";
    }
    return "";
}

Method Method::parse(std::string_view s) {
    std::string k;
    for (char c : ascii_lower(s)) {
        if (c != '-' && c != '_' && c != ' ') k += c;
    }
    if (k == "bm25") return {MethodKind::Bm25, Variant::GenScoStop};
    if (k == "rankingfile" || k == "ranking") return {MethodKind::RankingFile, Variant::GenScoStop};
    try {
        return {MethodKind::GenSco, parse_variant(s)};
    } catch (const Error&) {
        throw Error(ErrorCode::ConfigError, "field 'method' has unknown value \"" + std::string(s) + "\"");
    }
}

PipelineConfig RunConfig::pipeline() const {
    auto cfg = PipelineConfig::defaults_for(dataset.dataset, method.variant);
    Fields f(pipeline_keys, "pipeline");
    f.read("max_levels", cfg.max_levels);
    f.read("shots", cfg.shots);
    f.read("temperature", cfg.temperature);
    f.read("dedupe_pool", cfg.dedupe_pool);
    if (auto s = f.get<std::string>("score_sign")) {
        try {
            cfg.score_sign = parse_score_sign(*s);
        } catch (const Error&) {
            throw Error(ErrorCode::ConfigError, "field 'pipeline.score_sign' must be min_nll or max_nll");
        }
    }
    f.read("length_normalize", cfg.length_normalize);
    f.read("parallel_scoring", cfg.parallel_scoring);
    f.read("shuffle_context", cfg.shuffle_context);
    f.read("shuffle_seed", cfg.shuffle_seed);
    f.read("decomposition_max_tokens", cfg.decomposition_max_tokens);
    f.read("answer_max_tokens", cfg.answer_max_tokens);
    f.finish();
    if (cfg.max_levels < 1) throw Error(ErrorCode::ConfigError, "field 'pipeline.max_levels' must be >= 1");
    if (cfg.shots < 0) throw Error(ErrorCode::ConfigError, "field 'pipeline.shots' must be >= 0");
    return cfg;
}

RunConfig RunConfig::from_json(const json& j, const std::string& base_dir) {
    RunConfig cfg;
    Fields f(j, "");
    if (auto m = f.get<std::string>("method")) cfg.method = Method::parse(*m);

    if (!f.has("dataset")) throw Error(ErrorCode::ConfigError, "missing field 'dataset'");
    {
        Fields d(f.object("dataset"), "dataset");
        if (auto kind = d.get<std::string>("kind")) {
            try {
                cfg.dataset.dataset = parse_dataset(*kind);
            } catch (const Error&) {
                throw Error(ErrorCode::ConfigError, "field 'dataset.kind' has unknown value \"" + *kind + "\"");
            }
        }
        auto path = d.get<std::string>("path");
        if (!path) throw Error(ErrorCode::ConfigError, "missing field 'dataset.path'");
        cfg.dataset.path = resolve(base_dir, *path);
        if (auto l = d.get<std::size_t>("limit")) cfg.dataset.limit = *l;
        if (auto s = d.get<std::uint64_t>("split_seed")) cfg.dataset.split_seed = *s;
        d.read("musique_hops", cfg.dataset.musique_hops);
        d.finish();
    }

    if (auto s = f.get<std::string>("shots_file")) cfg.shots_file = resolve(base_dir, *s);
    if (auto s = f.get<std::string>("templates_dir")) cfg.templates_dir = resolve(base_dir, *s);
    if (auto s = f.get<std::string>("cache_dir")) cfg.cache_dir = resolve(base_dir, *s);
    if (auto s = f.get<std::string>("ranking_file")) cfg.ranking_file = resolve(base_dir, *s);
    f.read("concurrency", cfg.concurrency);
    f.read("max_in_flight", cfg.max_in_flight);
    f.read("top_k", cfg.top_k);
    if (f.has("pipeline")) {
        cfg.pipeline_keys = f.object("pipeline");
        if (!cfg.pipeline_keys.is_object()) throw Error(ErrorCode::ConfigError, "field 'pipeline' must be an object");
        for (const auto& [k, _] : cfg.pipeline_keys.items()) {
            if (!kPipelineKeys.count(k)) throw Error(ErrorCode::ConfigError, "unknown field 'pipeline." + k + "'");
        }
    } else {
        f.get<json>("pipeline");
    }
    if (f.has("generator")) cfg.generator = backend_from_json(f.object("generator"), "generator", base_dir);
    else f.get<json>("generator");
    if (f.has("scorer")) cfg.scorer = backend_from_json(f.object("scorer"), "scorer", base_dir);
    else f.get<json>("scorer");
    if (f.has("eval")) {
        Fields e(f.object("eval"), "eval");
        e.read("subset_sizes", cfg.eval.subset_sizes);
        e.read("subset_seed", cfg.eval.subset_seed);
        e.finish();
    } else {
        f.get<json>("eval");
    }
    f.finish();

    if (cfg.concurrency < 1) throw Error(ErrorCode::ConfigError, "field 'concurrency' must be >= 1");
    if (cfg.max_in_flight < 1) throw Error(ErrorCode::ConfigError, "field 'max_in_flight' must be >= 1");
    if (cfg.top_k < 1) throw Error(ErrorCode::ConfigError, "field 'top_k' must be >= 1");
    if (cfg.method.kind == MethodKind::RankingFile && cfg.ranking_file.empty()) {
        throw Error(ErrorCode::ConfigError, "field 'ranking_file' is required for the ranking-file method");
    }
    cfg.pipeline(); // validates the pipeline block
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    auto base = fs::path(path).parent_path().string();
    return from_json(j, base.empty() ? "." : base);
}

json RunConfig::to_json() const {
    json j;
    j["method"] = method.name();
    json d{{"kind", to_string(dataset.dataset)}, {"path", dataset.path}, {"musique_hops", dataset.musique_hops}};
    if (dataset.limit) d["limit"] = *dataset.limit;
    if (dataset.split_seed) d["split_seed"] = *dataset.split_seed;
    j["dataset"] = d;
    if (!shots_file.empty()) j["shots_file"] = shots_file;
    if (!templates_dir.empty()) j["templates_dir"] = templates_dir;
    if (!cache_dir.empty()) j["cache_dir"] = cache_dir;
    if (!ranking_file.empty()) j["ranking_file"] = ranking_file;
    j["concurrency"] = concurrency;
    j["max_in_flight"] = max_in_flight;
    j["top_k"] = top_k;

    const auto p = pipeline();
    j["pipeline"] = {{"max_levels", p.max_levels},
                     {"shots", p.shots},
                     {"temperature", p.temperature},
                     {"dedupe_pool", p.dedupe_pool},
                     {"score_sign", to_string(p.score_sign)},
                     {"length_normalize", p.length_normalize},
                     {"parallel_scoring", p.parallel_scoring},
                     {"shuffle_context", p.shuffle_context},
                     {"shuffle_seed", p.shuffle_seed},
                     {"decomposition_max_tokens", p.decomposition_max_tokens},
                     {"answer_max_tokens", p.answer_max_tokens}};
    j["generator"] = backend_to_json(generator);
    j["scorer"] = backend_to_json(scorer);
    j["eval"] = {{"subset_sizes", eval.subset_sizes}, {"subset_seed", eval.subset_seed}};
    return j;
}

void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
    if (o.dataset_path) cfg.dataset.path = fs::absolute(*o.dataset_path).lexically_normal().string();
    if (o.variant) {
        cfg.method = Method::parse(*o.variant);
    }
    if (o.limit) cfg.dataset.limit = *o.limit;
    if (o.seed) {
        cfg.pipeline_keys["shuffle_seed"] = *o.seed;
        if (cfg.dataset.limit) cfg.dataset.split_seed = *o.seed;
    }
    if (o.concurrency) {
        if (*o.concurrency < 1) throw Error(ErrorCode::ConfigError, "--concurrency must be >= 1");
        cfg.concurrency = *o.concurrency;
    }
    if (o.cache_dir) cfg.cache_dir = fs::absolute(*o.cache_dir).lexically_normal().string();
    if (o.generator_url) {
        cfg.generator.type = "http";
        cfg.generator.url = *o.generator_url;
    }
    if (o.scorer_url) {
        cfg.scorer.type = "http";
        cfg.scorer.url = *o.scorer_url;
    }
}

void check_backend(const BackendConfig& b, const std::string& field) {
    if (b.type == "scripted" && b.script.empty()) {
        throw Error(ErrorCode::ConfigError, "field '" + field + ".script' is required for scripted backends");
    }
    if (b.type == "http" && b.url.empty()) {
        throw Error(ErrorCode::ConfigError, "field '" + field + ".url' is required for http backends");
    }
    if (b.type == "http" && b.model.empty()) {
        throw Error(ErrorCode::ConfigError, "field '" + field + ".model' is required for http backends");
    }
}

void load_credentials(RunConfig& cfg) {
    auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? std::string(v) : std::string();
    };
    const auto fallback = env("OPENAI_API_KEY");
    cfg.generator.api_key = env("GENSCO_GENERATOR_API_KEY");
    if (cfg.generator.api_key.empty()) cfg.generator.api_key = fallback;
    cfg.scorer.api_key = env("GENSCO_SCORER_API_KEY");
    if (cfg.scorer.api_key.empty()) cfg.scorer.api_key = fallback;
}

} // namespace gensco
