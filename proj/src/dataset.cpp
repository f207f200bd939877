#include "gensco/dataset.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <nlohmann/json.hpp>

#include <numeric>
#include <sstream>

namespace gensco {

using nlohmann::json;

namespace {

std::string where(const std::string& origin, std::string_view text, std::size_t byte_offset, int base_line = 0) {
    int line = 1 + base_line;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte_offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return origin + ":" + std::to_string(line) + ":" + std::to_string(col);
}

const json& require(const json& j, const char* field, const std::string& ctx) {
    if (!j.is_object() || !j.contains(field) || j.at(field).is_null()) {
        throw Error(ErrorCode::SchemaError, ctx + ": missing field '" + field + "'");
    }
    return j.at(field);
}

std::string require_string(const json& j, const char* field, const std::string& ctx) {
    const auto& v = require(j, field, ctx);
    if (!v.is_string()) throw Error(ErrorCode::SchemaError, ctx + ": field '" + field + "' is not a string");
    return v.get<std::string>();
}

std::string record_id(const json& j, const std::string& ctx) {
    if (j.contains("_id")) return require_string(j, "_id", ctx);
    return require_string(j, "id", ctx);
}

std::string join_sentences(const json& sentences) {
    if (sentences.is_string()) return sentences.get<std::string>();
    std::string body;
    for (const auto& s : sentences) body += s.get<std::string>();
    return body;
}

// HotpotQA / 2WikiMultiHop record. Accepts both the list form of "context"
// and the column form used by some mirrors ({"title": [...], "sentences": [...]}).
MultiHopInstance parse_hotpot_record(const json& j, Dataset dataset, const std::string& ctx) {
    MultiHopInstance inst;
    inst.dataset = dataset;
    inst.id = record_id(j, ctx);
    const std::string rctx = ctx + " (" + inst.id + ")";
    inst.question = require_string(j, "question", rctx);
    inst.gold_answer = require_string(j, "answer", rctx);

    std::vector<std::pair<std::string, std::string>> raw;
    const auto& context = require(j, "context", rctx);
    if (context.is_array()) {
        for (const auto& entry : context) {
            if (!entry.is_array() || entry.size() != 2) {
                throw Error(ErrorCode::SchemaError, rctx + ": context entries must be [title, sentences]");
            }
            raw.emplace_back(entry[0].get<std::string>(), join_sentences(entry[1]));
        }
    } else if (context.is_object()) {
        const auto& titles = require(context, "title", rctx + " context");
        const auto& sents = require(context, "sentences", rctx + " context");
        if (titles.size() != sents.size()) throw Error(ErrorCode::SchemaError, rctx + ": context columns disagree");
        for (std::size_t i = 0; i < titles.size(); ++i) {
            raw.emplace_back(titles[i].get<std::string>(), join_sentences(sents[i]));
        }
    } else {
        throw Error(ErrorCode::SchemaError, rctx + ": field 'context' has unexpected type");
    }

    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto body = trim(raw[i].second);
        if (body.empty()) continue;
        inst.passages.push_back(Passage{static_cast<int>(i) + 1, trim(raw[i].first), body});
    }

    if (j.contains("supporting_facts") && !j["supporting_facts"].is_null()) {
        std::set<std::string> titles;
        const auto& sf = j["supporting_facts"];
        if (sf.is_array()) {
            for (const auto& f : sf) titles.insert(trim(f.at(0).get<std::string>()));
        } else if (sf.is_object()) {
            for (const auto& t : require(sf, "title", rctx + " supporting_facts")) titles.insert(trim(t.get<std::string>()));
        }
        std::set<int> support;
        for (const auto& p : inst.passages) {
            if (titles.count(p.title)) support.insert(p.index);
        }
        inst.supporting_indices = std::move(support);
    }
    return inst;
}

int musique_hop_count(const json& j, const std::string& id) {
    if (j.contains("question_decomposition") && j["question_decomposition"].is_array()) {
        return static_cast<int>(j["question_decomposition"].size());
    }
    // ids look like "2hop__482757_12019" or "3hop1__..."
    if (!id.empty() && id[0] >= '1' && id[0] <= '9' && id.find("hop") == 1) return id[0] - '0';
    return 0;
}

std::optional<MultiHopInstance> parse_musique_record(const json& j, const std::string& ctx, int hops) {
    MultiHopInstance inst;
    inst.dataset = Dataset::MuSiQue;
    inst.id = require_string(j, "id", ctx);
    const std::string rctx = ctx + " (" + inst.id + ")";
    if (hops > 0 && musique_hop_count(j, inst.id) != hops) return std::nullopt;
    if (j.contains("answerable") && j["answerable"].is_boolean() && !j["answerable"].get<bool>()) return std::nullopt;
    inst.question = require_string(j, "question", rctx);
    inst.gold_answer = require_string(j, "answer", rctx);
    std::set<int> support;
    bool has_labels = false;
    const auto& paragraphs = require(j, "paragraphs", rctx);
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        const auto& p = paragraphs[i];
        auto body = trim(require_string(p, "paragraph_text", rctx + " paragraph"));
        if (body.empty()) continue;
        const int index = static_cast<int>(i) + 1;
        inst.passages.push_back(Passage{index, trim(p.value("title", "")), body});
        if (p.contains("is_supporting")) {
            has_labels = true;
            if (p["is_supporting"].get<bool>()) support.insert(index);
        }
    }
    if (has_labels) inst.supporting_indices = std::move(support);
    return inst;
}

} // namespace

std::vector<MultiHopInstance> parse_dataset_text(std::string_view text, Dataset dataset, const std::string& origin,
                                                 int musique_hops) {
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) throw Error(ErrorCode::ParseError, origin + ": empty dataset file");

    std::vector<std::pair<json, std::string>> records;
    if (text[first] == '[') {
        json arr;
        try {
            arr = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, where(origin, text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            records.emplace_back(std::move(arr[i]), origin + " record " + std::to_string(i));
        }
    } else {
        std::size_t pos = 0;
        int lineno = 0;
        while (pos <= text.size()) {
            auto nl = text.find('\n', pos);
            auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            ++lineno;
            if (!trim(line).empty()) {
                try {
                    records.emplace_back(json::parse(line), origin + ":" + std::to_string(lineno));
                } catch (const json::parse_error& e) {
                    throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(lineno) + ":" +
                                                           std::to_string(e.byte) + ": " + e.what());
                }
            }
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
    }

    std::vector<MultiHopInstance> out;
    out.reserve(records.size());
    for (const auto& [rec, ctx] : records) {
        if (dataset == Dataset::MuSiQue) {
            if (auto inst = parse_musique_record(rec, ctx, musique_hops)) out.push_back(std::move(*inst));
        } else {
            out.push_back(parse_hotpot_record(rec, dataset, ctx));
        }
        if (!out.empty()) validate_instance(out.back());
    }
    return out;
}

std::vector<MultiHopInstance> load_dataset(const DatasetConfig& cfg) {
    auto all = parse_dataset_text(read_file(cfg.path), cfg.dataset, cfg.path, cfg.musique_hops);
    if (!cfg.limit) return all;
    if (*cfg.limit > all.size()) {
        throw Error(ErrorCode::SizeTooLarge, "limit " + std::to_string(*cfg.limit) + " exceeds the " +
                                                 std::to_string(all.size()) + " instances in " + cfg.path);
    }
    if (!cfg.split_seed) {
        all.resize(*cfg.limit);
        return all;
    }
    const std::size_t sizes[] = {*cfg.limit};
    return subsample(all, sizes, *cfg.split_seed).front();
}

std::string dataset_digest(const std::string& path) { return sha256_hex(read_file(path)); }

std::vector<std::vector<std::size_t>> subsample_indices(std::size_t n, std::span<const std::size_t> sizes,
                                                        std::uint64_t seed) {
    for (auto s : sizes) {
        if (s > n) {
            throw Error(ErrorCode::SizeTooLarge,
                        "subset size " + std::to_string(s) + " exceeds " + std::to_string(n) + " instances");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SeededRng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> out;
    out.reserve(sizes.size());
    for (auto s : sizes) out.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
    return out;
}

std::vector<std::vector<MultiHopInstance>> subsample(std::span<const MultiHopInstance> instances,
                                                     std::span<const std::size_t> sizes, std::uint64_t seed) {
    auto picks = subsample_indices(instances.size(), sizes, seed);
    std::vector<std::vector<MultiHopInstance>> out;
    out.reserve(picks.size());
    for (const auto& p : picks) {
        std::vector<MultiHopInstance> subset;
        subset.reserve(p.size());
        for (auto i : p) subset.push_back(instances[i]);
        out.push_back(std::move(subset));
    }
    return out;
}

std::string to_hotpot_jsonl(std::span<const MultiHopInstance> instances) {
    std::string out;
    for (const auto& inst : instances) {
        json context = json::array();
        json facts = json::array();
        for (const auto& p : inst.passages) {
            context.push_back(json::array({p.title, json::array({p.body})}));
            if (inst.supporting_indices && inst.supporting_indices->count(p.index)) {
                facts.push_back(json::array({p.title, 0}));
            }
        }
        json rec{{"_id", inst.id},
                 {"question", inst.question},
                 {"answer", inst.gold_answer},
                 {"context", context}};
        if (inst.supporting_indices) rec["supporting_facts"] = facts;
        out += rec.dump();
        out.push_back('\n');
    }
    return out;
}

} // namespace gensco
