#pragma once

#include "gensco/domain.hpp"
#include "gensco/pipeline.hpp"
#include "gensco/script_builder.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gensco {

/// Seeded generator of small film/director/birthplace chains in the
/// HotpotQA layout, together with an intended GenSco path per instance.
struct SyntheticOptions {
    std::size_t count = 50;
    std::uint64_t seed = 1;
    int distractors = 4;
    /// Chance that a planned level picks a distractor instead of the support.
    double wrong_passage_rate = 0.15;
    /// Chance that the planned answer is off even on a correct path.
    double wrong_answer_rate = 0.2;
    /// Chance of a three-hop chain (film -> director -> city -> country).
    double three_hop_rate = 0.3;
    /// Id prefix; ids are "<prefix>-<n>" with n zero-padded.
    std::string id_prefix = "syn";
};

struct SyntheticCorpus {
    std::vector<MultiHopInstance> instances;
    /// plans[i] drives instances[i] for the variant given to the generator.
    std::vector<PlannedRun> plans;
};

SyntheticCorpus make_synthetic(const SyntheticOptions& options, const PipelineConfig& cfg);

/// Script covering every instance of the corpus under `cfg`. With
/// `bm25_top_k` set it also answers the BM25 baseline's prompts (gold answer
/// when every support made the top k, "Unknown" otherwise).
std::vector<ScriptEntry> synthetic_script(const SyntheticCorpus& corpus, const PipelineConfig& cfg,
                                          const TemplateSet& templates, const std::vector<ShotExample>& shots,
                                          std::optional<std::size_t> bm25_top_k = std::nullopt);

} // namespace gensco
