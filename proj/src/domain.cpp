#include "gensco/domain.hpp"

#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <cmath>

namespace gensco {

using nlohmann::json;

std::string_view to_string(Dataset d) {
    switch (d) {
    case Dataset::TwoWikiMultiHop: return "2wikimultihop";
    case Dataset::AdvHotpot: return "adv_hotpot";
    case Dataset::MuSiQue: return "musique";
    case Dataset::Synthetic: return "synthetic";
    }
    return "synthetic";
}

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::GenScoMax: return "GenSco-max";
    case Variant::GenScoStop: return "GenSco-stop";
    case Variant::GenScoNoQD: return "GenSco-no-QD";
    }
    return "GenSco-max";
}

std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::FinKeyword: return "fin_keyword";
    case StopReason::RepeatedSubQuestion: return "repeated_subquestion";
    case StopReason::LikelihoodStop: return "likelihood_stop";
    case StopReason::RepeatedPassage: return "repeated_passage";
    case StopReason::MaxLevels: return "max_levels";
    }
    return "max_levels";
}

namespace {

// lower-case and drop separators so "GenSco-no-QD", "gensco_no_qd" and
// "GenScoNoQD" compare equal
std::string squash(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '-' || c == '_' || c == ' ') continue;
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

} // namespace

Dataset parse_dataset(std::string_view s) {
    auto k = squash(s);
    if (k == "2wikimultihop" || k == "2wiki" || k == "twowikimultihop" || k == "2wikimultihopqa")
        return Dataset::TwoWikiMultiHop;
    if (k == "advhotpot" || k == "adversarialhotpot" || k == "hotpotqa" || k == "hotpot")
        return Dataset::AdvHotpot;
    if (k == "musique") return Dataset::MuSiQue;
    if (k == "synthetic") return Dataset::Synthetic;
    throw Error(ErrorCode::ConfigError, "unknown dataset '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s) {
    auto k = squash(s);
    if (k == "genscomax" || k == "max") return Variant::GenScoMax;
    if (k == "genscostop" || k == "stop") return Variant::GenScoStop;
    if (k == "gensconoqd" || k == "noqd") return Variant::GenScoNoQD;
    throw Error(ErrorCode::ConfigError, "unknown variant '" + std::string(s) + "'");
}

StopReason parse_stop_reason(std::string_view s) {
    for (auto r : {StopReason::FinKeyword, StopReason::RepeatedSubQuestion, StopReason::LikelihoodStop,
                   StopReason::RepeatedPassage, StopReason::MaxLevels}) {
        if (to_string(r) == s) return r;
    }
    throw Error(ErrorCode::CorruptTrace, "unknown stop reason '" + std::string(s) + "'");
}

const Passage* MultiHopInstance::find_passage(int index) const {
    for (const auto& p : passages) {
        if (p.index == index) return &p;
    }
    return nullptr;
}

const MultiHopInstance& validate_instance(const MultiHopInstance& inst) {
    if (inst.passages.empty()) throw Error(ErrorCode::EmptyPassageSet, "instance '" + inst.id + "' has no passages");
    if (trim(inst.question).empty()) throw Error(ErrorCode::BlankQuestion, "instance '" + inst.id + "'");
    if (trim(inst.gold_answer).empty()) throw Error(ErrorCode::BlankAnswer, "instance '" + inst.id + "'");
    std::set<int> seen;
    for (const auto& p : inst.passages) {
        if (p.index < 0 || !seen.insert(p.index).second) {
            throw Error(ErrorCode::DuplicatePassageIndex,
                        "instance '" + inst.id + "' passage index " + std::to_string(p.index));
        }
        if (trim(p.body).empty()) {
            throw Error(ErrorCode::BlankPassage,
                        "instance '" + inst.id + "' passage " + std::to_string(p.index));
        }
    }
    if (inst.supporting_indices) {
        for (int s : *inst.supporting_indices) {
            if (!seen.count(s)) {
                throw Error(ErrorCode::DanglingSupportIndex,
                            "instance '" + inst.id + "' supporting index " + std::to_string(s) + " not among " +
                                std::to_string(inst.passages.size()) + " passages");
            }
        }
    }
    return inst;
}

bool trace_is_consistent(const SelectionTrace& trace, int max_levels) {
    if (static_cast<int>(trace.selected_sequence.size()) > max_levels) return false;
    if (trace.levels.size() != trace.selected_sequence.size()) return false;
    for (std::size_t i = 0; i < trace.levels.size(); ++i) {
        const auto& lvl = trace.levels[i];
        if (lvl.subquestion.level != static_cast<int>(i) + 1) return false;
        if (lvl.candidates.empty()) return false;
        const ScoredCandidate* best = nullptr;
        for (const auto& c : lvl.candidates) {
            if (!std::isfinite(c.score) || c.level != lvl.subquestion.level) return false;
            if (!best || c.score < best->score || (c.score == best->score && c.passage_index < best->passage_index)) {
                best = &c;
            }
        }
        if (best->passage_index != lvl.chosen_index) return false;
        if (trace.selected_sequence[i] != lvl.chosen_index) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Passage& p) {
    j = json{{"index", p.index}, {"title", p.title}, {"body", p.body}};
}

void from_json(const json& j, Passage& p) {
    j.at("index").get_to(p.index);
    p.title = j.value("title", "");
    j.at("body").get_to(p.body);
}

void to_json(json& j, const MultiHopInstance& m) {
    j = json{{"id", m.id},
             {"question", m.question},
             {"gold_answer", m.gold_answer},
             {"passages", m.passages},
             {"supporting_indices", m.supporting_indices ? json(*m.supporting_indices) : json(nullptr)},
             {"dataset", to_string(m.dataset)}};
}

void from_json(const json& j, MultiHopInstance& m) {
    j.at("id").get_to(m.id);
    j.at("question").get_to(m.question);
    j.at("gold_answer").get_to(m.gold_answer);
    j.at("passages").get_to(m.passages);
    if (j.contains("supporting_indices") && !j.at("supporting_indices").is_null()) {
        m.supporting_indices = j.at("supporting_indices").get<std::set<int>>();
    } else {
        m.supporting_indices.reset();
    }
    m.dataset = parse_dataset(j.at("dataset").get<std::string>());
}

void to_json(json& j, const SubQuestion& q) {
    j = json{{"level", q.level}, {"text", q.text}, {"terminal", q.terminal}};
}

void from_json(const json& j, SubQuestion& q) {
    j.at("level").get_to(q.level);
    j.at("text").get_to(q.text);
    j.at("terminal").get_to(q.terminal);
}

void to_json(json& j, const ScoredCandidate& c) {
    j = json{{"level", c.level}, {"passage_index", c.passage_index}, {"score", c.score}};
}

void from_json(const json& j, ScoredCandidate& c) {
    j.at("level").get_to(c.level);
    j.at("passage_index").get_to(c.passage_index);
    j.at("score").get_to(c.score);
}

void to_json(json& j, const TraceLevel& l) {
    j = json{{"subquestion", l.subquestion}, {"candidates", l.candidates}, {"chosen_index", l.chosen_index}};
}

void from_json(const json& j, TraceLevel& l) {
    j.at("subquestion").get_to(l.subquestion);
    j.at("candidates").get_to(l.candidates);
    j.at("chosen_index").get_to(l.chosen_index);
}

void to_json(json& j, const SelectionTrace& t) {
    j = json{{"instance_id", t.instance_id},
             {"variant", to_string(t.variant)},
             {"levels", t.levels},
             {"stop_reason", to_string(t.stop_reason)},
             {"selected_sequence", t.selected_sequence},
             {"empty_context", t.empty_context}};
}

void from_json(const json& j, SelectionTrace& t) {
    j.at("instance_id").get_to(t.instance_id);
    t.variant = parse_variant(j.at("variant").get<std::string>());
    j.at("levels").get_to(t.levels);
    t.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    j.at("selected_sequence").get_to(t.selected_sequence);
    t.empty_context = j.value("empty_context", false);
}

void to_json(json& j, const GeneratorParams& g) {
    j = json{{"model_id", g.model_id}, {"temperature", g.temperature}, {"shots", g.shots}};
}

void from_json(const json& j, GeneratorParams& g) {
    j.at("model_id").get_to(g.model_id);
    j.at("temperature").get_to(g.temperature);
    j.at("shots").get_to(g.shots);
}

void to_json(json& j, const AnswerRecord& a) {
    j = json{{"instance_id", a.instance_id},
             {"method", a.method},
             {"predicted_answer", a.predicted_answer},
             {"context_order", a.context_order},
             {"generator_params", a.generator_params},
             {"permutation", a.permutation ? json(*a.permutation) : json(nullptr)}};
}

void from_json(const json& j, AnswerRecord& a) {
    j.at("instance_id").get_to(a.instance_id);
    a.method = j.value("method", "");
    j.at("predicted_answer").get_to(a.predicted_answer);
    j.at("context_order").get_to(a.context_order);
    j.at("generator_params").get_to(a.generator_params);
    if (j.contains("permutation") && !j.at("permutation").is_null()) {
        a.permutation = j.at("permutation").get<std::vector<int>>();
    } else {
        a.permutation.reset();
    }
}

} // namespace gensco
