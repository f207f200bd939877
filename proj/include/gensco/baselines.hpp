#pragma once

#include "gensco/domain.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gensco {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Case-folded runs of ASCII alphanumerics; bytes >= 0x80 count as word
/// characters so UTF-8 words stay whole. No stop-word list.
std::vector<std::string> bm25_tokenize(std::string_view text);

/// Okapi BM25 over a fixed passage set. A passage's indexed text is its title
/// followed by its body. The idf is ln(1 + (N - df + 0.5) / (df + 0.5)),
/// which stays positive for terms present in most passages.
class Bm25Index {
public:
    explicit Bm25Index(std::span<const Passage> passages, Bm25Params params = {});

    /// Sum over query tokens (repeats included) of idf * saturated tf.
    double score(std::string_view query, std::size_t doc) const;
    std::vector<double> scores(std::string_view query) const;

    std::size_t doc_count() const { return lengths_.size(); }
    double average_length() const { return avg_length_; }
    std::size_t length(std::size_t doc) const { return lengths_.at(doc); }
    std::size_t doc_freq(const std::string& term) const;
    std::size_t term_freq(std::size_t doc, const std::string& term) const;
    double idf(const std::string& term) const;
    const Bm25Params& params() const { return params_; }

private:
    Bm25Params params_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freq_;
    std::vector<std::size_t> lengths_;
    double avg_length_ = 0.0;
};

struct RankedPassage {
    Passage passage;
    double score = 0.0;
};

/// Descending score, ties broken by passage index.
std::vector<RankedPassage> bm25_rank(std::string_view question, std::span<const Passage> passages,
                                     Bm25Params params = {});

/// First min(k, size) elements, order preserved.
template <typename T>
std::vector<T> top_k(std::span<const T> ranked, std::size_t k) {
    auto n = std::min(k, ranked.size());
    return std::vector<T>(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
}

template <typename T>
std::vector<T> top_k(const std::vector<T>& ranked, std::size_t k) {
    return top_k(std::span<const T>(ranked), k);
}

struct ShuffleResult {
    std::vector<int> sequence;
    /// sequence[i] == original[permutation[i]]
    std::vector<int> permutation;
};

/// Seeded uniform permutation. For two or more elements the draw is repeated
/// until the permutation is not the identity and, when the input holds at
/// least two distinct values, until the output order differs from the input.
ShuffleResult shuffle_sequence(std::span<const int> sequence, std::uint64_t seed);

/// Precomputed rankings: JSON lines {"id": "...", "ranking": [passage indices]}.
std::map<std::string, std::vector<int>> load_rankings(const std::string& path);

} // namespace gensco
