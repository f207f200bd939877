#pragma once

#include "gensco/domain.hpp"
#include "gensco/llm_gateway.hpp"
#include "gensco/prompts.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace gensco {

/// MinNll selects the candidate under which the target is most likely.
/// MaxNll flips every comparison; it exists for replication studies whose
/// published scores use the opposite sign.
enum class ScoreSign { MinNll, MaxNll };

std::string_view to_string(ScoreSign s);
ScoreSign parse_score_sign(std::string_view s);

struct ScoringOptions {
    ScoreSign sign = ScoreSign::MinNll;
    /// Mean per-token NLL when true, summed NLL otherwise.
    bool length_normalize = true;
    /// Issue the k scorer calls of a level concurrently.
    bool parallel = false;
    const TemplateSet* templates = &TemplateSet::builtin();
};

/// Score in the "lower is better" orientation used everywhere downstream.
double oriented_score(const ScorerResponse& r, const ScoringOptions& options);

struct LevelSelection {
    int level = 1;
    /// One entry per candidate, ordered by passage index.
    std::vector<ScoredCandidate> candidates;
    ScoredCandidate chosen;
};

/// Strict total order: lower score first, lower passage index on ties.
bool better_than(const ScoredCandidate& a, const ScoredCandidate& b);

/// Scores every candidate as the continuation of `target` given the scoring
/// prompt over prefix ++ [candidate] and returns the best one. Any failed
/// candidate aborts the whole level.
LevelSelection score_level(int level, std::span<const Passage> prefix, std::span<const Passage> candidates,
                           std::string_view target, LlmGateway& gateway, const ScoringOptions& options);

} // namespace gensco
