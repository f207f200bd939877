#include "gensco/pipeline.hpp"

#include "gensco/baselines.hpp"
#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <algorithm>

namespace gensco {

PipelineConfig PipelineConfig::defaults_for(Dataset dataset, Variant variant) {
    PipelineConfig cfg;
    cfg.variant = variant;
    switch (dataset) {
    case Dataset::TwoWikiMultiHop: cfg.max_levels = 5; cfg.shots = 2; break;
    case Dataset::AdvHotpot: cfg.max_levels = 2; cfg.shots = 4; break;
    case Dataset::MuSiQue: cfg.max_levels = 4; cfg.shots = 3; break;
    case Dataset::Synthetic: cfg.max_levels = 5; cfg.shots = 2; break;
    }
    return cfg;
}

ScoringOptions PipelineConfig::scoring_options(const TemplateSet& templates) const {
    return ScoringOptions{score_sign, length_normalize, parallel_scoring, &templates};
}

StopSides compute_stop_sides(const DecompositionState& state, const SubQuestion& candidate,
                             const PipelineConfig& cfg, PipelineContext& ctx) {
    std::vector<std::string> without;
    for (const auto& q : state.subquestions()) without.push_back(q.text);
    std::vector<std::string> with = without;
    with.push_back(candidate.text);

    const auto opts = cfg.scoring_options(ctx.templates);
    auto score = [&](std::span<const std::string> qs) {
        auto prompt = render_stop_prompt(state.passages(), qs, ctx.templates);
        auto r = ctx.gateway.score_continuation(make_scorer_request(prompt, state.question()),
                                                CallPurpose::StopCriterion);
        return oriented_score(r, opts);
    };
    StopSides sides;
    sides.without_candidate = score(without);
    sides.with_candidate = score(with);
    return sides;
}

std::optional<StopReason> should_stop(const DecompositionState& state, const SubQuestion& candidate,
                                      const PipelineConfig& cfg, PipelineContext& ctx) {
    if (static_cast<int>(state.depth()) >= cfg.max_levels) return StopReason::MaxLevels;
    if (candidate.terminal) return StopReason::FinKeyword;
    if (cfg.variant == Variant::GenScoNoQD) return std::nullopt;
    if (is_repeat(state, candidate)) return StopReason::RepeatedSubQuestion;
    // undefined at level 1: there is no (i-1)-side to compare against
    if (cfg.variant == Variant::GenScoStop && state.depth() >= 1) {
        if (likelihood_stop(compute_stop_sides(state, candidate, cfg, ctx))) return StopReason::LikelihoodStop;
    }
    return std::nullopt;
}

std::optional<StopReason> should_stop_after_selection(std::span<const int> selected, int chosen_index) {
    if (std::find(selected.begin(), selected.end(), chosen_index) != selected.end()) {
        return StopReason::RepeatedPassage;
    }
    return std::nullopt;
}

std::string answer_question(std::string_view question, std::span<const Passage> passages,
                            const PipelineConfig& cfg, PipelineContext& ctx) {
    auto prompt = render_answer_prompt(question, passages, ctx.shots, ctx.templates, /*allow_empty_context=*/true);
    GeneratorRequest req{prompt.text, cfg.temperature, cfg.answer_max_tokens, {"\n"}};
    return trim(ctx.gateway.generate(req, CallPurpose::Answer));
}

InstanceResult run_instance(const MultiHopInstance& inst, const PipelineConfig& cfg, PipelineContext& ctx) {
    validate_instance(inst);
    if (cfg.max_levels < 1) throw Error(ErrorCode::ConfigError, "max_levels must be >= 1");

    InstanceResult result;
    SelectionTrace& trace = result.trace;
    trace.instance_id = inst.id;
    trace.variant = cfg.variant;
    trace.stop_reason = StopReason::MaxLevels;

    const auto scoring = cfg.scoring_options(ctx.templates);
    const DecompositionOptions decomposition{cfg.temperature, cfg.decomposition_max_tokens, cfg.max_levels,
                                             &ctx.templates};
    DecompositionState state(inst.question);

    for (int level = 1; level <= cfg.max_levels; ++level) {
        SubQuestion q;
        if (cfg.variant == Variant::GenScoNoQD) {
            q = SubQuestion{level, inst.question, false};
        } else {
            q = next_subquestion(state, ctx.gateway, decomposition);
            if (auto reason = should_stop(state, q, cfg, ctx)) {
                trace.stop_reason = *reason;
                break;
            }
        }

        std::vector<Passage> pool;
        for (const auto& p : inst.passages) {
            if (cfg.dedupe_pool && std::count(trace.selected_sequence.begin(), trace.selected_sequence.end(), p.index))
                continue;
            pool.push_back(p);
        }
        if (pool.empty()) {
            // every passage already selected; nothing left to expand
            trace.stop_reason = StopReason::MaxLevels;
            break;
        }

        auto selection = score_level(level, state.passages(), pool, q.text, ctx.gateway, scoring);
        if (cfg.variant == Variant::GenScoNoQD) {
            if (auto reason = should_stop_after_selection(trace.selected_sequence, selection.chosen.passage_index)) {
                trace.stop_reason = *reason;
                break;
            }
        }
        const Passage* chosen = inst.find_passage(selection.chosen.passage_index);
        trace.levels.push_back(TraceLevel{q, selection.candidates, chosen->index});
        trace.selected_sequence.push_back(chosen->index);
        state.push(q, *chosen);
    }

    AnswerRecord& answer = result.answer;
    answer.instance_id = inst.id;
    answer.method = std::string(to_string(cfg.variant));
    answer.context_order = trace.selected_sequence;
    if (cfg.shuffle_context && !trace.selected_sequence.empty()) {
        auto shuffled = shuffle_sequence(trace.selected_sequence, seed_from(cfg.shuffle_seed, inst.id));
        answer.context_order = shuffled.sequence;
        answer.permutation = shuffled.permutation;
        answer.method += " shuffled";
    }
    trace.empty_context = answer.context_order.empty();

    std::vector<Passage> context;
    for (int idx : answer.context_order) context.push_back(*inst.find_passage(idx));
    answer.predicted_answer = answer_question(inst.question, context, cfg, ctx);
    answer.generator_params = GeneratorParams{ctx.gateway.generator_backend().id(), cfg.temperature,
                                              static_cast<int>(ctx.shots.size())};
    return result;
}

} // namespace gensco
