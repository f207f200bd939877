#include "gensco/baselines.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

namespace gensco {

std::vector<std::string> bm25_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Bm25Index::Bm25Index(std::span<const Passage> passages, Bm25Params params) : params_(params) {
    term_freq_.reserve(passages.size());
    std::size_t total = 0;
    for (const auto& p : passages) {
        auto tokens = bm25_tokenize(p.title + " " + p.body);
        std::unordered_map<std::string, std::size_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (const auto& [term, _] : tf) ++doc_freq_[term];
        lengths_.push_back(tokens.size());
        total += tokens.size();
        term_freq_.push_back(std::move(tf));
    }
    avg_length_ = lengths_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(lengths_.size());
}

std::size_t Bm25Index::doc_freq(const std::string& term) const {
    auto it = doc_freq_.find(term);
    return it == doc_freq_.end() ? 0 : it->second;
}

std::size_t Bm25Index::term_freq(std::size_t doc, const std::string& term) const {
    const auto& tf = term_freq_.at(doc);
    auto it = tf.find(term);
    return it == tf.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const {
    const double n = static_cast<double>(doc_count());
    const double df = static_cast<double>(doc_freq(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(std::string_view query, std::size_t doc) const {
    const double len_ratio = avg_length_ > 0.0 ? static_cast<double>(lengths_.at(doc)) / avg_length_ : 1.0;
    const double norm = params_.k1 * (1.0 - params_.b + params_.b * len_ratio);
    double s = 0.0;
    for (const auto& term : bm25_tokenize(query)) {
        const auto tf = static_cast<double>(term_freq(doc, term));
        if (tf == 0.0) continue;
        s += idf(term) * tf * (params_.k1 + 1.0) / (tf + norm);
    }
    return s;
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
    std::vector<double> out(doc_count());
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = score(query, d);
    return out;
}

std::vector<RankedPassage> bm25_rank(std::string_view question, std::span<const Passage> passages,
                                     Bm25Params params) {
    if (passages.empty()) throw Error(ErrorCode::InvalidArgument, "bm25_rank needs at least one passage");
    Bm25Index index(passages, params);
    auto s = index.scores(question);
    std::vector<RankedPassage> out;
    out.reserve(passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i) out.push_back({passages[i], s[i]});
    std::stable_sort(out.begin(), out.end(), [](const RankedPassage& a, const RankedPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage.index < b.passage.index;
    });
    return out;
}

ShuffleResult shuffle_sequence(std::span<const int> sequence, std::uint64_t seed) {
    if (sequence.empty()) throw Error(ErrorCode::InvalidArgument, "cannot shuffle an empty sequence");
    const std::vector<int> original(sequence.begin(), sequence.end());
    std::vector<int> identity(original.size());
    std::iota(identity.begin(), identity.end(), 0);

    bool distinct_values = false;
    for (int v : original) distinct_values |= (v != original.front());

    SeededRng rng(seed);
    ShuffleResult out;
    out.permutation = identity;
    out.sequence = original;
    if (original.size() < 2) return out;
    do {
        out.permutation = identity;
        rng.shuffle(out.permutation);
        for (std::size_t i = 0; i < original.size(); ++i) out.sequence[i] = original[out.permutation[i]];
    } while (out.permutation == identity || (distinct_values && out.sequence == original));
    return out;
}

std::map<std::string, std::vector<int>> load_rankings(const std::string& path) {
    std::istringstream in(read_file(path));
    std::map<std::string, std::vector<int>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out[j.at("id").get<std::string>()] = j.at("ranking").get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace gensco
