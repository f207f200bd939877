#include "gensco/prompts.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <filesystem>
#include <set>

namespace gensco {

using nlohmann::json;

std::string_view to_string(TemplateId id) {
    switch (id) {
    case TemplateId::Answering: return "answering";
    case TemplateId::Decomposition: return "decomposition";
    case TemplateId::StopCriterion: return "stop_criterion";
    case TemplateId::PassageScoring: return "passage_scoring";
    }
    return "answering";
}

namespace {

constexpr std::string_view kAnswering =
    "Answer the question given the context. Here are a few examples:\n"
    "{{shots}}"
    "Question: {{question}}\n"
    "Context: {{context}}\n"
    "Answer:";

constexpr std::string_view kAnsweringShot =
    "Question: {{question}}\n"
    "Context: {{context}}\n"
    "Answer: {{answer}}\n"
    "\n";

constexpr std::string_view kDecomposition =
    "I am going to give you a question. I want to decompose it into a series of subquestions. Each subquestion "
    "should be self-contained with all the information necessary to solve it.  Make sure not to decompose more "
    "than necessary or have any trivial subquestions. Do not repeat any subquestion. You’ll be evaluated on the "
    "simplicity, conciseness, and correctness of your decompositions. If no more subquestion could be drawn, "
    "please generate \"<FIN></FIN>\". Here are a couple of examples:\n"
    "Question: What are the other books from the author of \"The Good Earth\"?\n"
    "Subquestion 1: Who is the author of the book \"The Good Earth\"?\n"
    "Subcontext 1: The author of the book \"The Good Earth\" is Pearl S. Buck.\n"
    "Subquestion 2: What are the titles of books written by Pearl S. Buck other than \"The Good Earth\"?\n"
    "\n"
    "Question: Which movie came out first \"Spiderman 2\" or \"Batman Begins\"?\n"
    "Subquestion 1: When was the release date of the movie \"Spiderman 2\"?\n"
    "Subcontext 1: Spiderman 2 is a 2004 American superhero film based on the Marvel Comics character of the "
    "same name.\n"
    "Subquestion 2: When was the release date of the movie \"Batman Begins\"?\n"
    "\n"
    "Question: {{question}}\n"
    "{{history}}"
    "Subquestion {{next_level}}:";

constexpr std::string_view kDecompositionStep =
    "Subquestion {{level}}: {{subquestion}}\n"
    "Subcontext {{level}}: {{subcontext}}\n";

constexpr std::string_view kStopCriterion =
    "Generate a question given its complete decomposition into subquestions along with the context containing "
    "answers to these subquestions.\n"
    "Context: {{context}}\n"
    "Decomposition: {{decomposition}}\n"
    "Question:";

constexpr std::string_view kPassageScoring =
    "Generate a question based on the context.\n"
    "Context: {{context}}\n"
    "Question:";

std::string slot_digest(const std::map<std::string, std::string>& slots) {
    std::vector<std::string_view> fields;
    for (const auto& [k, v] : slots) {
        fields.push_back(k);
        fields.push_back(v);
    }
    return digest_fields(fields);
}

RenderedPrompt render(TemplateId id, std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    return RenderedPrompt{fill_template(tmpl, slots), id, slot_digest(slots)};
}

} // namespace

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set{std::string(kAnswering),     std::string(kAnsweringShot),
                                 std::string(kDecomposition), std::string(kDecompositionStep),
                                 std::string(kStopCriterion), std::string(kPassageScoring)};
    return set;
}

TemplateSet TemplateSet::load(const std::string& dir) {
    auto read = [&](const char* name) {
        auto path = std::filesystem::path(dir) / (std::string(name) + ".txt");
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::ConfigError, "missing template file " + path.string());
        }
        return read_file(path.string());
    };
    return TemplateSet{read("answering"),      read("answering_shot"), read("decomposition"),
                       read("decomposition_step"), read("stop_criterion"), read("passage_scoring")};
}

ShotBank ShotBank::load(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    ShotBank bank;
    bank.dataset = j.value("dataset", "");
    if (!j.contains("shots") || !j["shots"].is_array()) throw Error(ErrorCode::SchemaError, path + ": missing 'shots'");
    for (const auto& s : j["shots"]) {
        for (const char* field : {"question", "context", "answer"}) {
            if (!s.contains(field)) throw Error(ErrorCode::SchemaError, path + ": shot missing '" + field + "'");
        }
        bank.shots.push_back({s["question"].get<std::string>(), s["context"].get<std::string>(),
                              s["answer"].get<std::string>()});
    }
    return bank;
}

std::vector<ShotExample> ShotBank::take(int n) const {
    if (n < 0 || static_cast<std::size_t>(n) > shots.size()) {
        throw Error(ErrorCode::ConfigError, "shot bank '" + dataset + "' holds " + std::to_string(shots.size()) +
                                                " shots, " + std::to_string(n) + " requested");
    }
    return {shots.begin(), shots.begin() + n};
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::set<std::string> used;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw Error(ErrorCode::TemplateError, "unterminated placeholder");
        out.append(tmpl.substr(pos, open - pos));
        std::string name(tmpl.substr(open + 2, close - open - 2));
        auto it = slots.find(name);
        if (it == slots.end()) throw Error(ErrorCode::TemplateError, "no value for slot '" + name + "'");
        out.append(it->second);
        used.insert(name);
        pos = close + 2;
    }
    for (const auto& [name, _] : slots) {
        if (!used.count(name)) throw Error(ErrorCode::TemplateError, "template has no slot '" + name + "'");
    }
    return out;
}

std::string render_passage(const Passage& p) {
    auto title = trim(p.title);
    auto body = trim(p.body);
    return title.empty() ? body : title + ": " + body;
}

std::string concat_passages(std::span<const Passage> passages) {
    std::vector<std::string> parts;
    parts.reserve(passages.size());
    for (const auto& p : passages) parts.push_back(render_passage(p));
    return join(parts, " ");
}

RenderedPrompt render_answer_prompt(std::string_view question, std::span<const Passage> passages,
                                    std::span<const ShotExample> shots, const TemplateSet& templates,
                                    bool allow_empty_context) {
    if (passages.empty() && !allow_empty_context) {
        throw Error(ErrorCode::InvalidArgument, "answer prompt needs at least one passage");
    }
    std::string shot_block;
    for (const auto& s : shots) {
        shot_block += fill_template(templates.answering_shot,
                                    {{"question", s.question}, {"context", s.context}, {"answer", s.answer}});
    }
    return render(TemplateId::Answering, templates.answering,
                  {{"shots", shot_block}, {"question", std::string(question)}, {"context", concat_passages(passages)}});
}

RenderedPrompt render_decomposition_prompt(std::string_view question, std::span<const std::string> subquestions,
                                           std::span<const Passage> passages, const TemplateSet& templates) {
    if (subquestions.size() != passages.size()) {
        throw Error(ErrorCode::AlignmentError, std::to_string(subquestions.size()) + " sub-questions but " +
                                                   std::to_string(passages.size()) + " passages in history");
    }
    std::string history;
    for (std::size_t i = 0; i < subquestions.size(); ++i) {
        history += fill_template(templates.decomposition_step, {{"level", std::to_string(i + 1)},
                                                                {"subquestion", subquestions[i]},
                                                                {"subcontext", render_passage(passages[i])}});
    }
    return render(TemplateId::Decomposition, templates.decomposition,
                  {{"question", std::string(question)},
                   {"history", history},
                   {"next_level", std::to_string(subquestions.size() + 1)}});
}

RenderedPrompt render_stop_prompt(std::span<const Passage> passages, std::span<const std::string> subquestions,
                                  const TemplateSet& templates) {
    if (passages.empty()) throw Error(ErrorCode::InvalidArgument, "stop criterion needs at least one passage");
    if (subquestions.size() != passages.size() && subquestions.size() != passages.size() + 1) {
        throw Error(ErrorCode::AlignmentError, std::to_string(subquestions.size()) + " sub-questions for " +
                                                   std::to_string(passages.size()) + " passages");
    }
    std::vector<std::string> qs(subquestions.begin(), subquestions.end());
    return render(TemplateId::StopCriterion, templates.stop_criterion,
                  {{"context", concat_passages(passages)}, {"decomposition", join(qs, " ")}});
}

RenderedPrompt render_scoring_prompt(std::span<const Passage> sequence, const TemplateSet& templates) {
    if (sequence.empty()) throw Error(ErrorCode::InvalidArgument, "scoring prompt needs at least one passage");
    return render(TemplateId::PassageScoring, templates.passage_scoring, {{"context", concat_passages(sequence)}});
}

ScorerRequest make_scorer_request(const RenderedPrompt& prompt, std::string_view target) {
    auto t = trim(target);
    if (t.empty()) throw Error(ErrorCode::InvalidArgument, "empty scoring target");
    return ScorerRequest{prompt.text, " " + t};
}

} // namespace gensco
