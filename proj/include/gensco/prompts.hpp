#pragma once

#include "gensco/domain.hpp"
#include "gensco/llm_gateway.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gensco {

/// Literal keyword the generator emits when no further sub-question exists.
inline constexpr std::string_view kFinKeyword = "<FIN></FIN>";

enum class TemplateId { Answering, Decomposition, StopCriterion, PassageScoring };
std::string_view to_string(TemplateId id);

struct RenderedPrompt {
    std::string text;
    TemplateId template_id = TemplateId::Answering;
    /// Digest over every slot name and value used for the render.
    std::string slot_digest;
};

/// Few-shot example for the answering prompt.
struct ShotExample {
    std::string question;
    std::string context;
    std::string answer;
};

struct ShotBank {
    std::string dataset;
    std::vector<ShotExample> shots;

    /// JSON file: {"dataset": "...", "shots": [{"question","context","answer"}, ...]}
    static ShotBank load(const std::string& path);
    /// First `n` shots; throws ConfigError if the bank holds fewer.
    std::vector<ShotExample> take(int n) const;
};

/// Plain-text templates with `{{slot}}` placeholders. Repeated blocks (shots,
/// decomposition history) have their own sub-templates.
struct TemplateSet {
    std::string answering;
    std::string answering_shot;
    std::string decomposition;
    std::string decomposition_step;
    std::string stop_criterion;
    std::string passage_scoring;

    static const TemplateSet& builtin();
    /// Reads `<dir>/<name>.txt` for each member, byte for byte.
    static TemplateSet load(const std::string& dir);

    bool operator==(const TemplateSet&) const = default;
};

/// Single-pass `{{name}}` substitution. Values are inserted literally (never
/// re-expanded). Throws TemplateError for a placeholder without a value or a
/// value without a placeholder.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots);

/// "title: body" when the passage has a title, otherwise the body.
std::string render_passage(const Passage& p);
/// Rendered passages joined by a single space, in the given order.
std::string concat_passages(std::span<const Passage> passages);

RenderedPrompt render_answer_prompt(std::string_view question, std::span<const Passage> passages,
                                    std::span<const ShotExample> shots,
                                    const TemplateSet& templates = TemplateSet::builtin(),
                                    bool allow_empty_context = false);

/// `subquestions` and `passages` are the aligned history; the prompt ends
/// with the header for sub-question history.size()+1.
RenderedPrompt render_decomposition_prompt(std::string_view question, std::span<const std::string> subquestions,
                                           std::span<const Passage> passages,
                                           const TemplateSet& templates = TemplateSet::builtin());

/// Context = the selected passages, Decomposition = the sub-questions. Needs at
/// least one passage; sub-questions may number passages.size() or one more.
RenderedPrompt render_stop_prompt(std::span<const Passage> passages, std::span<const std::string> subquestions,
                                  const TemplateSet& templates = TemplateSet::builtin());

RenderedPrompt render_scoring_prompt(std::span<const Passage> sequence,
                                     const TemplateSet& templates = TemplateSet::builtin());

/// Continuations are scored with a leading space since every scorer prompt
/// ends in a "Question:" header.
ScorerRequest make_scorer_request(const RenderedPrompt& prompt, std::string_view target);

} // namespace gensco
