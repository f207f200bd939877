#pragma once

#include "gensco/domain.hpp"
#include "gensco/pipeline.hpp"
#include "gensco/prompts.hpp"
#include "gensco/scripted_backend.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gensco {

/// One level of an intended greedy path.
struct PlannedLevel {
    /// Decomposition completion (ignored by GenSco-no-QD).
    std::string subquestion;
    int chosen = 0;
    /// Oriented scores per passage index. Passages left out get
    /// kChosenScore when chosen and kOtherScore otherwise.
    std::map<int, double> scores;
    /// GenSco-stop, levels >= 2: stop-test sides for this level's
    /// sub-question. Defaults to a "continue" pair.
    std::optional<StopSides> stop;
};

/// How the loop ends after the planned levels (unless max_levels is hit).
enum class PlannedEnd {
    /// Next decomposition completion is the keyword.
    Fin,
    /// Next completion is `end_subquestion`, which repeats an earlier one.
    RepeatedSubQuestion,
    /// GenSco-stop: next completion is `end_subquestion` and `end_stop`
    /// makes the likelihood test fire.
    LikelihoodStop,
    /// GenSco-no-QD: the next level picks `end_choice`, already selected.
    RepeatedPassage,
};

struct PlannedRun {
    std::vector<PlannedLevel> levels;
    PlannedEnd end = PlannedEnd::Fin;
    std::string end_subquestion;
    StopSides end_stop{1.0, 1.5};
    int end_choice = 0;
    /// Answer completion returned for the final prompt.
    std::string answer;
};

/// Builds a script that drives run_instance along a planned path. It renders
/// the same prompts the pipeline renders, so any divergence between plan and
/// pipeline surfaces as ScriptMiss.
class ScriptBuilder {
public:
    static constexpr double kChosenScore = 0.1;
    static constexpr double kOtherScore = 2.0;

    ScriptBuilder(PipelineConfig cfg, const TemplateSet& templates = TemplateSet::builtin(),
                  std::vector<ShotExample> shots = {});

    void add_generation(const RenderedPrompt& prompt, std::string completion, std::string note = {});
    /// Scripts token logprobs so that oriented_score() returns `oriented`.
    void add_scoring(const ScorerRequest& request, double oriented, std::string note = {});

    /// Emits every call run_instance makes for `inst` along `run`.
    void plan(const MultiHopInstance& inst, const PlannedRun& run);

    const std::vector<ScriptEntry>& entries() const { return entries_; }
    std::vector<ScriptEntry> take() { return std::move(entries_); }

    /// Logprob list whose oriented score under `cfg` equals `oriented`.
    static std::vector<double> logprobs_for(double oriented, const PipelineConfig& cfg);

private:
    PipelineConfig cfg_;
    const TemplateSet& templates_;
    std::vector<ShotExample> shots_;
    std::vector<ScriptEntry> entries_;
};

} // namespace gensco
