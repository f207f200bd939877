#include "gensco/decomposition.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

namespace gensco {

void DecompositionState::push(const SubQuestion& q, const Passage& selected) {
    if (q.terminal) throw Error(ErrorCode::InvalidArgument, "terminal sub-questions are not part of the history");
    if (q.level != static_cast<int>(subquestions_.size()) + 1) {
        throw Error(ErrorCode::InvalidArgument, "sub-question level " + std::to_string(q.level) +
                                                    " does not follow history of " +
                                                    std::to_string(subquestions_.size()));
    }
    subquestions_.push_back(q);
    passages_.push_back(selected);
    seen_normalized_.insert(normalize_subquestion(q.text));
}

std::string normalize_subquestion(std::string_view text) { return normalize_whitespace_casefold(text); }

SubQuestion parse_subquestion(std::string_view completion, int level) {
    SubQuestion q;
    q.level = level;
    if (completion.find(kFinKeyword) != std::string_view::npos) {
        q.terminal = true;
        q.text = std::string(kFinKeyword);
        return q;
    }
    auto rest = trim(completion);
    auto nl = rest.find_first_of("\r\n");
    q.text = trim(std::string_view(rest).substr(0, nl));
    q.terminal = q.text.empty();
    return q;
}

SubQuestion next_subquestion(const DecompositionState& state, LlmGateway& gateway,
                             const DecompositionOptions& options) {
    if (static_cast<int>(state.depth()) >= options.max_levels) {
        throw Error(ErrorCode::InvalidArgument, "decomposition already at max levels");
    }
    std::vector<std::string> texts;
    texts.reserve(state.depth());
    for (const auto& q : state.subquestions()) texts.push_back(q.text);

    auto prompt = render_decomposition_prompt(state.question(), texts, state.passages(), *options.templates);
    GeneratorRequest req{prompt.text, options.temperature, options.max_output_tokens, {}};
    auto completion = gateway.generate(req, CallPurpose::Decomposition);
    return parse_subquestion(completion, static_cast<int>(state.depth()) + 1);
}

bool is_repeat(const DecompositionState& state, const SubQuestion& candidate) {
    return state.seen_normalized().count(normalize_subquestion(candidate.text)) > 0;
}

} // namespace gensco
