#pragma once

#include "gensco/domain.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gensco {

struct DatasetConfig {
    Dataset dataset = Dataset::Synthetic;
    std::string path;
    /// Keep this many instances: the first `limit`, or a seeded sample of that
    /// size when `split_seed` is set.
    std::optional<std::size_t> limit;
    std::optional<std::uint64_t> split_seed;
    /// MuSiQue only: keep questions with exactly this many hops (0 = all).
    int musique_hops = 2;
};

/// Loads a dataset in its published layout.
///
/// 2WikiMultiHop, AdvHotpot and Synthetic use the HotpotQA layout (a JSON
/// array or JSON lines of {"_id", "question", "answer", "context":
/// [[title, [sentences...]], ...], "supporting_facts": [[title, sent], ...]}).
/// MuSiQue uses its JSON-lines layout with "paragraphs" carrying
/// "is_supporting" flags. Passages are numbered from 1 in source order and
/// sentences are concatenated as-is.
///
/// Throws ParseError (with line and column) for malformed input and
/// SchemaError naming the missing field.
std::vector<MultiHopInstance> load_dataset(const DatasetConfig& cfg);

/// Parses dataset text directly; `origin` is used in error messages.
std::vector<MultiHopInstance> parse_dataset_text(std::string_view text, Dataset dataset,
                                                 const std::string& origin = "<memory>", int musique_hops = 2);

/// SHA-256 of the dataset file's bytes.
std::string dataset_digest(const std::string& path);

/// Seeded, nested index subsets: one seeded shuffle of [0, n), and subset i
/// is its prefix of length sizes[i]. Throws SizeTooLarge if a size exceeds n.
std::vector<std::vector<std::size_t>> subsample_indices(std::size_t n, std::span<const std::size_t> sizes,
                                                        std::uint64_t seed);

std::vector<std::vector<MultiHopInstance>> subsample(std::span<const MultiHopInstance> instances,
                                                     std::span<const std::size_t> sizes, std::uint64_t seed);

/// Writes instances back out in the HotpotQA layout (one JSON object per
/// line). Supporting passages become one supporting fact each.
std::string to_hotpot_jsonl(std::span<const MultiHopInstance> instances);

} // namespace gensco
