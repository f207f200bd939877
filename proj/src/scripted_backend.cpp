#include "gensco/scripted_backend.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <algorithm>
#include <sstream>

namespace gensco {

using nlohmann::json;

std::string generator_fingerprint(std::string_view prompt) {
    const std::string_view fields[] = {"generator", prompt};
    return digest_fields(fields);
}

std::string scorer_fingerprint(std::string_view prompt, std::string_view continuation) {
    const std::string_view fields[] = {"scorer", prompt, continuation};
    return digest_fields(fields);
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries, std::string name) {
    std::sort(entries.begin(), entries.end(), [](const ScriptEntry& a, const ScriptEntry& b) {
        return std::tie(a.role, a.fingerprint) < std::tie(b.role, b.fingerprint);
    });
    std::string digest_src;
    for (auto& e : entries) {
        if (e.role == Role::Generator) {
            auto [it, inserted] = generator_.emplace(e.fingerprint, e.text);
            if (!inserted && it->second != e.text) {
                throw Error(ErrorCode::ScriptConflict, "generator fingerprint " + e.fingerprint + " scripted twice");
            }
        } else {
            auto [it, inserted] = scorer_.emplace(e.fingerprint, e.token_logprobs);
            if (!inserted && it->second != e.token_logprobs) {
                throw Error(ErrorCode::ScriptConflict, "scorer fingerprint " + e.fingerprint + " scripted twice");
            }
        }
        auto keyed = to_json(e);
        keyed.erase("note");
        digest_src += keyed.dump();
        digest_src.push_back('\n');
    }
    id_ = name + ":" + sha256_hex(digest_src).substr(0, 16);
}

std::string ScriptedBackend::complete(const GeneratorRequest& req) {
    auto it = generator_.find(generator_fingerprint(req.prompt));
    if (it == generator_.end()) {
        throw Error(ErrorCode::ScriptMiss, "no generator entry for prompt ending '" +
                                               req.prompt.substr(req.prompt.size() > 80 ? req.prompt.size() - 80 : 0) +
                                               "'");
    }
    return it->second;
}

std::vector<double> ScriptedBackend::continuation_logprobs(const ScorerRequest& req) {
    auto it = scorer_.find(scorer_fingerprint(req.prompt, req.continuation));
    if (it == scorer_.end()) {
        throw Error(ErrorCode::ScriptMiss, "no scorer entry for continuation '" + req.continuation + "'");
    }
    return it->second;
}

json to_json(const ScriptEntry& e) {
    json j{{"role", to_string(e.role)}, {"fingerprint", e.fingerprint}};
    if (e.role == Role::Generator) {
        j["text"] = e.text;
    } else {
        j["token_logprobs"] = e.token_logprobs;
    }
    if (!e.note.empty()) j["note"] = e.note;
    return j;
}

ScriptEntry script_entry_from_json(const json& j) {
    ScriptEntry e;
    const auto role = j.at("role").get<std::string>();
    if (role == "generator") {
        e.role = Role::Generator;
        e.text = j.at("text").get<std::string>();
    } else if (role == "scorer") {
        e.role = Role::Scorer;
        e.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
    } else {
        throw Error(ErrorCode::SchemaError, "script role must be generator or scorer, got '" + role + "'");
    }
    if (j.contains("fingerprint")) {
        e.fingerprint = j.at("fingerprint").get<std::string>();
    } else if (j.contains("prompt")) {
        const auto prompt = j.at("prompt").get<std::string>();
        e.fingerprint = e.role == Role::Generator
                            ? generator_fingerprint(prompt)
                            : scorer_fingerprint(prompt, j.at("continuation").get<std::string>());
    } else {
        throw Error(ErrorCode::SchemaError, "script entry needs 'fingerprint' or 'prompt'");
    }
    e.note = j.value("note", "");
    return e;
}

ScriptedBackend ScriptedBackend::load(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<ScriptEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            entries.push_back(script_entry_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return ScriptedBackend(std::move(entries), "scripted");
}

std::string write_script(std::vector<ScriptEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const ScriptEntry& a, const ScriptEntry& b) {
        return std::tie(a.role, a.fingerprint) < std::tie(b.role, b.fingerprint);
    });
    entries.erase(std::unique(entries.begin(), entries.end(),
                              [](const ScriptEntry& a, const ScriptEntry& b) {
                                  return a.role == b.role && a.fingerprint == b.fingerprint && a.text == b.text &&
                                         a.token_logprobs == b.token_logprobs;
                              }),
                  entries.end());
    std::string out;
    for (const auto& e : entries) {
        out += to_json(e).dump();
        out.push_back('\n');
    }
    return out;
}

} // namespace gensco
