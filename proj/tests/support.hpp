#pragma once

#include "gensco/domain.hpp"
#include "gensco/llm_gateway.hpp"
#include "gensco/scripted_backend.hpp"

#include <atomic>
#include <functional>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::string source_path(const std::string& rel) { return std::string(GENSCO_SOURCE_DIR) + "/" + rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("gensco-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// Instance with passages numbered 1..n ("Title i" / "Body text i.").
inline gensco::MultiHopInstance make_instance(int n, std::string id = "q1") {
    gensco::MultiHopInstance inst;
    inst.id = std::move(id);
    inst.question = "Where was the director of film X born?";
    inst.gold_answer = "Paris";
    for (int i = 1; i <= n; ++i) {
        inst.passages.push_back({i, "Title " + std::to_string(i), "Body text " + std::to_string(i) + "."});
    }
    inst.supporting_indices = std::set<int>{1, 2};
    return inst;
}

/// Gateway over one scripted backend playing both roles, memory cache.
struct ScriptedRig {
    std::shared_ptr<gensco::ScriptedBackend> backend;
    std::shared_ptr<gensco::MemoryCache> cache;
    std::unique_ptr<gensco::LlmGateway> gateway;

    explicit ScriptedRig(std::vector<gensco::ScriptEntry> entries, bool with_cache = true) {
        backend = std::make_shared<gensco::ScriptedBackend>(std::move(entries));
        if (with_cache) cache = std::make_shared<gensco::MemoryCache>();
        gateway = std::make_unique<gensco::LlmGateway>(backend, backend, cache);
    }
};

} // namespace testing

namespace testing {

/// Backend whose answers are computed by callbacks from the request text.
class RuleBackend final : public gensco::LlmBackend {
public:
    using GenFn = std::function<std::string(const std::string& prompt)>;
    using ScoreFn = std::function<std::vector<double>(const std::string& prompt, const std::string& continuation)>;

    RuleBackend(GenFn gen, ScoreFn score) : gen_(std::move(gen)), score_(std::move(score)) {}
    std::string id() const override { return "rules"; }
    std::string complete(const gensco::GeneratorRequest& req) override { return gen_(req.prompt); }
    std::vector<double> continuation_logprobs(const gensco::ScorerRequest& req) override {
        return score_(req.prompt, req.continuation);
    }

private:
    GenFn gen_;
    ScoreFn score_;
};

/// Line of `prompt` following the last occurrence of `label`, up to the newline.
inline std::string last_field(const std::string& prompt, const std::string& label) {
    auto pos = prompt.rfind(label);
    if (pos == std::string::npos) return {};
    pos += label.size();
    auto end = prompt.find('\n', pos);
    return prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

/// Level number a decomposition prompt asks for ("...Subquestion N:").
inline int requested_level(const std::string& prompt) {
    auto pos = prompt.rfind("Subquestion ");
    return std::stoi(prompt.substr(pos + 12));
}

} // namespace testing
