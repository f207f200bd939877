#include "gensco/script_builder.hpp"

#include "gensco/baselines.hpp"
#include "gensco/decomposition.hpp"
#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <algorithm>

namespace gensco {

ScriptBuilder::ScriptBuilder(PipelineConfig cfg, const TemplateSet& templates, std::vector<ShotExample> shots)
    : cfg_(cfg), templates_(templates), shots_(std::move(shots)) {}

std::vector<double> ScriptBuilder::logprobs_for(double oriented, const PipelineConfig& cfg) {
    // one token, so mean and sum coincide
    const double nll = cfg.score_sign == ScoreSign::MinNll ? oriented : -oriented;
    return {-nll};
}

void ScriptBuilder::add_generation(const RenderedPrompt& prompt, std::string completion, std::string note) {
    ScriptEntry e;
    e.role = Role::Generator;
    e.fingerprint = generator_fingerprint(prompt.text);
    e.text = std::move(completion);
    e.note = note.empty() ? std::string(to_string(prompt.template_id)) : std::move(note);
    entries_.push_back(std::move(e));
}

void ScriptBuilder::add_scoring(const ScorerRequest& request, double oriented, std::string note) {
    ScriptEntry e;
    e.role = Role::Scorer;
    e.fingerprint = scorer_fingerprint(request.prompt, request.continuation);
    e.token_logprobs = logprobs_for(oriented, cfg_);
    e.note = std::move(note);
    entries_.push_back(std::move(e));
}

void ScriptBuilder::plan(const MultiHopInstance& inst, const PlannedRun& run) {
    const bool no_qd = cfg_.variant == Variant::GenScoNoQD;
    std::vector<Passage> selected;
    std::vector<int> selected_idx;
    std::vector<std::string> subquestions;

    auto passage = [&](int idx) -> const Passage& {
        const Passage* p = inst.find_passage(idx);
        if (!p) throw Error(ErrorCode::InvalidArgument, "plan for " + inst.id + " names unknown passage " +
                                                            std::to_string(idx));
        return *p;
    };

    auto script_stop = [&](std::string_view candidate, const StopSides& sides) {
        std::vector<std::string> with = subquestions;
        with.emplace_back(candidate);
        add_scoring(make_scorer_request(render_stop_prompt(selected, subquestions, templates_), inst.question),
                    sides.without_candidate, inst.id + " stop without");
        add_scoring(make_scorer_request(render_stop_prompt(selected, with, templates_), inst.question),
                    sides.with_candidate, inst.id + " stop with");
    };

    auto script_level = [&](int level, const std::string& target, int chosen, const std::map<int, double>& scores) {
        for (const auto& p : inst.passages) {
            if (cfg_.dedupe_pool && std::count(selected_idx.begin(), selected_idx.end(), p.index)) continue;
            std::vector<Passage> seq = selected;
            seq.push_back(p);
            auto it = scores.find(p.index);
            double s = it != scores.end() ? it->second : (p.index == chosen ? kChosenScore : kOtherScore);
            add_scoring(make_scorer_request(render_scoring_prompt(seq, templates_), target), s,
                        inst.id + " level " + std::to_string(level) + " passage " + std::to_string(p.index));
        }
    };

    const int planned = static_cast<int>(run.levels.size());
    if (planned > cfg_.max_levels) {
        throw Error(ErrorCode::InvalidArgument, "plan for " + inst.id + " exceeds max_levels");
    }
    for (int i = 0; i < planned; ++i) {
        const auto& lv = run.levels[static_cast<std::size_t>(i)];
        const int level = i + 1;
        std::string target = inst.question;
        if (!no_qd) {
            add_generation(render_decomposition_prompt(inst.question, subquestions, selected, templates_),
                           lv.subquestion, inst.id + " decomposition " + std::to_string(level));
            target = parse_subquestion(lv.subquestion, level).text;
            if (cfg_.variant == Variant::GenScoStop && level >= 2) {
                script_stop(target, lv.stop.value_or(StopSides{1.0, 0.9}));
            }
        }
        script_level(level, target, lv.chosen, lv.scores);
        selected.push_back(passage(lv.chosen));
        selected_idx.push_back(lv.chosen);
        subquestions.push_back(target);
    }

    const bool pool_left = !cfg_.dedupe_pool || selected_idx.size() < inst.passages.size();
    if (planned < cfg_.max_levels && pool_left) {
        if (no_qd) {
            if (run.end != PlannedEnd::RepeatedPassage) {
                throw Error(ErrorCode::InvalidArgument, "no-QD plans end with a repeated passage");
            }
            script_level(planned + 1, inst.question, run.end_choice, {});
        } else {
            switch (run.end) {
            case PlannedEnd::Fin:
                add_generation(render_decomposition_prompt(inst.question, subquestions, selected, templates_),
                               std::string(kFinKeyword), inst.id + " decomposition end");
                break;
            case PlannedEnd::RepeatedSubQuestion:
            case PlannedEnd::LikelihoodStop:
                add_generation(render_decomposition_prompt(inst.question, subquestions, selected, templates_),
                               run.end_subquestion, inst.id + " decomposition end");
                if (run.end == PlannedEnd::LikelihoodStop) {
                    if (cfg_.variant != Variant::GenScoStop || planned < 1) {
                        throw Error(ErrorCode::InvalidArgument, "likelihood stop needs GenSco-stop and a level");
                    }
                    script_stop(parse_subquestion(run.end_subquestion, planned + 1).text, run.end_stop);
                }
                break;
            case PlannedEnd::RepeatedPassage:
                throw Error(ErrorCode::InvalidArgument, "repeated-passage ending is for GenSco-no-QD");
            }
        }
    }

    std::vector<int> order = selected_idx;
    if (cfg_.shuffle_context && !order.empty()) {
        order = shuffle_sequence(selected_idx, seed_from(cfg_.shuffle_seed, inst.id)).sequence;
    }
    std::vector<Passage> context;
    for (int idx : order) context.push_back(passage(idx));
    add_generation(render_answer_prompt(inst.question, context, shots_, templates_, true), run.answer,
                   inst.id + " answer");
}

} // namespace gensco
