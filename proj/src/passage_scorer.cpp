#include "gensco/passage_scorer.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>

namespace gensco {

std::string_view to_string(ScoreSign s) { return s == ScoreSign::MinNll ? "min_nll" : "max_nll"; }

ScoreSign parse_score_sign(std::string_view s) {
    auto k = ascii_lower(s);
    if (k == "min_nll" || k == "minnll" || k == "min-nll") return ScoreSign::MinNll;
    if (k == "max_nll" || k == "maxnll" || k == "max-nll") return ScoreSign::MaxNll;
    throw Error(ErrorCode::ConfigError, "score_sign must be min_nll or max_nll, got '" + std::string(s) + "'");
}

double oriented_score(const ScorerResponse& r, const ScoringOptions& options) {
    double nll = options.length_normalize ? r.mean_nll : r.sum_nll();
    return options.sign == ScoreSign::MinNll ? nll : -nll;
}

bool better_than(const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.passage_index < b.passage_index;
}

LevelSelection score_level(int level, std::span<const Passage> prefix, std::span<const Passage> candidates,
                           std::string_view target, LlmGateway& gateway, const ScoringOptions& options) {
    if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no candidates to score");
    if (trim(target).empty()) throw Error(ErrorCode::InvalidArgument, "empty scoring target");

    auto score_one = [&](const Passage& candidate) {
        std::vector<Passage> sequence(prefix.begin(), prefix.end());
        sequence.push_back(candidate);
        auto prompt = render_scoring_prompt(sequence, *options.templates);
        auto response = gateway.score_continuation(make_scorer_request(prompt, target), CallPurpose::Relevance);
        double s = oriented_score(response, options);
        if (!std::isfinite(s)) {
            throw Error(ErrorCode::LogprobsUnsupported,
                        "non-finite score for passage " + std::to_string(candidate.index));
        }
        return ScoredCandidate{level, candidate.index, s};
    };

    LevelSelection out;
    out.level = level;
    out.candidates.reserve(candidates.size());
    if (options.parallel && candidates.size() > 1) {
        std::vector<std::future<ScoredCandidate>> pending;
        pending.reserve(candidates.size());
        for (const auto& c : candidates) pending.push_back(std::async(std::launch::async, score_one, std::cref(c)));
        std::exception_ptr first_error;
        for (auto& f : pending) {
            try {
                out.candidates.push_back(f.get());
            } catch (...) {
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);
    } else {
        for (const auto& c : candidates) out.candidates.push_back(score_one(c));
    }

    std::sort(out.candidates.begin(), out.candidates.end(),
              [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.passage_index < b.passage_index; });
    out.chosen = *std::min_element(out.candidates.begin(), out.candidates.end(), better_than);
    return out;
}

} // namespace gensco
