#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gensco {

enum class Dataset { TwoWikiMultiHop, AdvHotpot, MuSiQue, Synthetic };
enum class Variant { GenScoMax, GenScoStop, GenScoNoQD };
enum class StopReason { FinKeyword, RepeatedSubQuestion, LikelihoodStop, RepeatedPassage, MaxLevels };

std::string_view to_string(Dataset d);
std::string_view to_string(Variant v);
std::string_view to_string(StopReason r);

/// Accepts canonical names plus common spellings ("GenSco-stop", "gensco_stop", "2wiki").
Dataset parse_dataset(std::string_view s);
Variant parse_variant(std::string_view s);
StopReason parse_stop_reason(std::string_view s);

/// One candidate context unit. `index` is the passage's position label within
/// its instance; loaders number passages from 1 in source order.
struct Passage {
    int index = 0;
    std::string title;
    std::string body;

    bool operator==(const Passage&) const = default;
};

struct MultiHopInstance {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<Passage> passages;
    std::optional<std::set<int>> supporting_indices;
    Dataset dataset = Dataset::Synthetic;

    /// Passage with the given index label; nullptr if absent.
    const Passage* find_passage(int index) const;

    bool operator==(const MultiHopInstance&) const = default;
};

struct SubQuestion {
    int level = 1;
    std::string text;
    bool terminal = false;

    bool operator==(const SubQuestion&) const = default;
};

/// `score` is the value the selector minimises: mean per-token NLL in nats
/// (or the raw sum when length normalisation is off), negated when the
/// pipeline runs with the max-NLL sign convention.
struct ScoredCandidate {
    int level = 1;
    int passage_index = 0;
    double score = 0.0;

    bool operator==(const ScoredCandidate&) const = default;
};

struct TraceLevel {
    SubQuestion subquestion;
    std::vector<ScoredCandidate> candidates;
    int chosen_index = 0;

    bool operator==(const TraceLevel&) const = default;
};

struct SelectionTrace {
    std::string instance_id;
    Variant variant = Variant::GenScoMax;
    std::vector<TraceLevel> levels;
    StopReason stop_reason = StopReason::MaxLevels;
    std::vector<int> selected_sequence;
    /// True when the answer prompt went out with no selected passage.
    bool empty_context = false;

    bool operator==(const SelectionTrace&) const = default;
};

struct GeneratorParams {
    std::string model_id;
    double temperature = 0.0;
    int shots = 0;

    bool operator==(const GeneratorParams&) const = default;
};

struct AnswerRecord {
    std::string instance_id;
    std::string method;
    std::string predicted_answer;
    std::vector<int> context_order;
    GeneratorParams generator_params;
    /// Set only by the shuffle ablation: context_order[i] = selected[permutation[i]].
    std::optional<std::vector<int>> permutation;

    bool operator==(const AnswerRecord&) const = default;
};

/// Returns the instance unchanged if every invariant holds, otherwise throws
/// gensco::Error (EmptyPassageSet, DanglingSupportIndex, BlankQuestion, ...).
const MultiHopInstance& validate_instance(const MultiHopInstance& inst);

/// Replays stored candidates and checks chosen = argmin with index tie-break,
/// selected_sequence agreement and consecutive levels. Returns false on any
/// inconsistency.
bool trace_is_consistent(const SelectionTrace& trace, int max_levels);

void to_json(nlohmann::json& j, const Passage& p);
void from_json(const nlohmann::json& j, Passage& p);
void to_json(nlohmann::json& j, const MultiHopInstance& m);
void from_json(const nlohmann::json& j, MultiHopInstance& m);
void to_json(nlohmann::json& j, const SubQuestion& q);
void from_json(const nlohmann::json& j, SubQuestion& q);
void to_json(nlohmann::json& j, const ScoredCandidate& c);
void from_json(const nlohmann::json& j, ScoredCandidate& c);
void to_json(nlohmann::json& j, const TraceLevel& l);
void from_json(const nlohmann::json& j, TraceLevel& l);
void to_json(nlohmann::json& j, const SelectionTrace& t);
void from_json(const nlohmann::json& j, SelectionTrace& t);
void to_json(nlohmann::json& j, const GeneratorParams& g);
void from_json(const nlohmann::json& j, GeneratorParams& g);
void to_json(nlohmann::json& j, const AnswerRecord& a);
void from_json(const nlohmann::json& j, AnswerRecord& a);

} // namespace gensco
