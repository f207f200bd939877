#pragma once

#include "gensco/decomposition.hpp"
#include "gensco/domain.hpp"
#include "gensco/llm_gateway.hpp"
#include "gensco/passage_scorer.hpp"
#include "gensco/prompts.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gensco {

struct PipelineConfig {
    Variant variant = Variant::GenScoMax;
    int max_levels = 5;
    int shots = 2;
    double temperature = 0.0;
    bool dedupe_pool = false;
    ScoreSign score_sign = ScoreSign::MinNll;
    bool length_normalize = true;
    bool parallel_scoring = false;
    int decomposition_max_tokens = 64;
    int answer_max_tokens = 32;
    /// Shuffle ablation: permute the selected passages before answering.
    bool shuffle_context = false;
    std::uint64_t shuffle_seed = 0;

    /// Level limits and shot counts used for each dataset's experiments:
    /// 2WikiMultiHop 5 levels / 2 shots, AdvHotpot 2 / 4, MuSiQue 4 / 3.
    static PipelineConfig defaults_for(Dataset dataset, Variant variant);

    ScoringOptions scoring_options(const TemplateSet& templates) const;
};

struct PipelineContext {
    LlmGateway& gateway;
    const TemplateSet& templates = TemplateSet::builtin();
    /// Answering shots, already cut to the configured count.
    std::vector<ShotExample> shots;
};

struct InstanceResult {
    SelectionTrace trace;
    AnswerRecord answer;
};

/// Both sides of the likelihood stopping test, oriented so that lower is
/// better: `without` conditions on q_1..q_{i-1}, `with` on q_1..q_i; both use
/// the passages selected so far as context.
struct StopSides {
    double without_candidate = 0.0;
    double with_candidate = 0.0;
};

/// Strict inequality: stop only when adding the candidate makes the question
/// less likely.
inline bool likelihood_stop(const StopSides& s) { return s.with_candidate > s.without_candidate; }

StopSides compute_stop_sides(const DecompositionState& state, const SubQuestion& candidate,
                             const PipelineConfig& cfg, PipelineContext& ctx);

/// Checks run after a sub-question is generated and before any passage is
/// scored for it: max levels, keyword, repeat, then (GenSco-stop, level >= 2)
/// the likelihood test.
std::optional<StopReason> should_stop(const DecompositionState& state, const SubQuestion& candidate,
                                      const PipelineConfig& cfg, PipelineContext& ctx);

/// Post-selection check used by the no-decomposition variant.
std::optional<StopReason> should_stop_after_selection(std::span<const int> selected, int chosen_index);

/// Runs the greedy selection loop for one instance, then asks the generator
/// for the answer once, over the selected passages in selection order.
InstanceResult run_instance(const MultiHopInstance& inst, const PipelineConfig& cfg, PipelineContext& ctx);

/// Answers `question` over `passages` in the given order (shared by the
/// pipeline and the retrieval baselines).
std::string answer_question(std::string_view question, std::span<const Passage> passages,
                            const PipelineConfig& cfg, PipelineContext& ctx);

} // namespace gensco
