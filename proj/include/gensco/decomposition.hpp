#pragma once

#include "gensco/domain.hpp"
#include "gensco/llm_gateway.hpp"
#include "gensco/prompts.hpp"

#include <set>
#include <string>
#include <vector>

namespace gensco {

/// Question plus the (sub-question, selected passage) pairs so far.
class DecompositionState {
public:
    explicit DecompositionState(std::string question) : question_(std::move(question)) {}

    const std::string& question() const { return question_; }
    const std::vector<SubQuestion>& subquestions() const { return subquestions_; }
    const std::vector<Passage>& passages() const { return passages_; }
    const std::set<std::string>& seen_normalized() const { return seen_normalized_; }
    std::size_t depth() const { return subquestions_.size(); }

    /// Records a non-terminal sub-question and the passage chosen for it.
    void push(const SubQuestion& q, const Passage& selected);

private:
    std::string question_;
    std::vector<SubQuestion> subquestions_;
    std::vector<Passage> passages_;
    std::set<std::string> seen_normalized_;
};

struct DecompositionOptions {
    double temperature = 0.0;
    int max_output_tokens = 64;
    int max_levels = 5;
    const TemplateSet* templates = &TemplateSet::builtin();
};

/// trim + case-fold + collapse internal whitespace
std::string normalize_subquestion(std::string_view text);

/// Interprets a raw decomposition completion as the sub-question for `level`:
/// leading whitespace is dropped and the text is cut at the first line break.
/// Terminal when the keyword appears anywhere or nothing is left.
SubQuestion parse_subquestion(std::string_view completion, int level);

/// Asks the generator for sub-question depth()+1.
SubQuestion next_subquestion(const DecompositionState& state, LlmGateway& gateway,
                             const DecompositionOptions& options);

bool is_repeat(const DecompositionState& state, const SubQuestion& candidate);

} // namespace gensco
