#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gensco/error.hpp"
#include "gensco/pipeline.hpp"
#include "support.hpp"

#include <algorithm>
#include <map>

using namespace gensco;

namespace {

/// Rule-driven world for one instance with passages "Body text i.".
///  - decomposition: subqs[level-1], or the keyword past the end
///  - relevance: preferred[(continuation, last passage)] gets NLL 0.1, else 2.0
///  - stop criterion: stop_nll[number of sub-questions in the prompt]
///  - answer: "Paris" plus a second line that must be cut
struct World {
    std::vector<std::string> subqs;
    std::map<std::pair<std::string, int>, double> preferred;
    std::map<int, double> stop_nll;
    std::vector<std::string> answer_prompts;
    std::vector<std::string> scoring_log;

    std::shared_ptr<testing::RuleBackend> backend() {
        return std::make_shared<testing::RuleBackend>(
            [this](const std::string& prompt) -> std::string {
                if (prompt.rfind("Answer the question", 0) == 0) {
                    answer_prompts.push_back(prompt);
                    return " Paris\nignored";
                }
                int level = testing::requested_level(prompt);
                if (level > static_cast<int>(subqs.size())) return " <FIN></FIN>";
                return " " + subqs[static_cast<std::size_t>(level - 1)] + "\nSubcontext: x";
            },
            [this](const std::string& prompt, const std::string& cont) -> std::vector<double> {
                if (prompt.find("\nDecomposition: ") != std::string::npos) {
                    auto decomposition = testing::last_field(prompt, "Decomposition: ");
                    int n = static_cast<int>(std::count(decomposition.begin(), decomposition.end(), '?'));
                    return {-stop_nll.at(n)};
                }
                auto ctx = testing::last_field(prompt, "Context: ");
                auto pos = ctx.rfind("Body text ");
                int last = std::stoi(ctx.substr(pos + 10));
                scoring_log.push_back(cont + "|" + std::to_string(last));
                auto it = preferred.find({cont.substr(1), last});
                return {it != preferred.end() ? -it->second : -2.0};
            });
    }
};

struct Run {
    InstanceResult result;
    CallCounters counters;
};

Run run(World& w, const MultiHopInstance& inst, const PipelineConfig& cfg) {
    auto b = w.backend();
    LlmGateway gw(b, b, nullptr);
    PipelineContext ctx{gw, TemplateSet::builtin(), {}};
    auto result = run_instance(inst, cfg, ctx);
    return {result, gw.counters()};
}

PipelineConfig config(Variant v, int max_levels = 5) {
    auto cfg = PipelineConfig::defaults_for(Dataset::Synthetic, v);
    cfg.max_levels = max_levels;
    return cfg;
}

long calls(const CallCounters& c, CallPurpose p) {
    auto it = c.by_purpose.find(p);
    return it == c.by_purpose.end() ? 0 : it->second.requests;
}

} // namespace

TEST_CASE("dataset defaults") {
    auto w = PipelineConfig::defaults_for(Dataset::TwoWikiMultiHop, Variant::GenScoMax);
    CHECK(w.max_levels == 5);
    CHECK(w.shots == 2);
    auto h = PipelineConfig::defaults_for(Dataset::AdvHotpot, Variant::GenScoStop);
    CHECK(h.max_levels == 2);
    CHECK(h.shots == 4);
    CHECK(h.variant == Variant::GenScoStop);
    auto m = PipelineConfig::defaults_for(Dataset::MuSiQue, Variant::GenScoNoQD);
    CHECK(m.max_levels == 4);
    CHECK(m.shots == 3);
    CHECK(m.temperature == 0.0);
}

TEST_CASE("likelihood_stop is strict") {
    CHECK(likelihood_stop({1.5, 1.8}));
    CHECK_FALSE(likelihood_stop({1.5, 1.5}));
    CHECK_FALSE(likelihood_stop({1.8, 1.5}));
}

TEST_CASE("GenSco-max follows the decomposition until the keyword") {
    World w;
    w.subqs = {"Who directed X?", "Where was Ann born?"};
    w.preferred = {{{"Who directed X?", 3}, 0.1}, {{"Where was Ann born?", 1}, 0.1}};
    auto inst = testing::make_instance(4);
    auto r = run(w, inst, config(Variant::GenScoMax));

    const auto& t = r.result.trace;
    CHECK(t.selected_sequence == std::vector<int>{3, 1});
    CHECK(t.stop_reason == StopReason::FinKeyword);
    CHECK(t.variant == Variant::GenScoMax);
    CHECK(trace_is_consistent(t, 5));
    REQUIRE(t.levels.size() == 2);
    CHECK(t.levels[0].subquestion.text == "Who directed X?");
    CHECK(t.levels[1].candidates.size() == 4);
    CHECK_FALSE(t.empty_context);

    const auto& a = r.result.answer;
    CHECK(a.predicted_answer == "Paris");
    CHECK(a.context_order == std::vector<int>{3, 1});
    CHECK(a.method == "GenSco-max");
    CHECK_FALSE(a.permutation.has_value());
    REQUIRE(w.answer_prompts.size() == 1);
    CHECK(w.answer_prompts[0].find("Context: Title 3: Body text 3. Title 1: Body text 1.\nAnswer:") !=
          std::string::npos);

    // level 2 scoring conditions on the level 1 pick
    CHECK(calls(r.counters, CallPurpose::Decomposition) == 3);
    CHECK(calls(r.counters, CallPurpose::Relevance) == 8);
    CHECK(calls(r.counters, CallPurpose::Answer) == 1);
    CHECK(calls(r.counters, CallPurpose::StopCriterion) == 0);
}

TEST_CASE("max levels ends the loop without another decomposition call") {
    World w;
    w.subqs = {"a?", "b?", "c?", "d?"};
    auto inst = testing::make_instance(3);
    auto r = run(w, inst, config(Variant::GenScoMax, 2));
    CHECK(r.result.trace.stop_reason == StopReason::MaxLevels);
    CHECK(r.result.trace.levels.size() == 2);
    CHECK(calls(r.counters, CallPurpose::Decomposition) == 2);
    // every level scores every passage: ties all resolve to passage 1
    CHECK(r.result.trace.selected_sequence == std::vector<int>{1, 1});
}

TEST_CASE("a repeated sub-question stops before scoring") {
    World w;
    w.subqs = {"Who is X?", "  who IS   x? "};
    auto inst = testing::make_instance(3);
    auto r = run(w, inst, config(Variant::GenScoMax));
    CHECK(r.result.trace.stop_reason == StopReason::RepeatedSubQuestion);
    CHECK(r.result.trace.levels.size() == 1);
    CHECK(calls(r.counters, CallPurpose::Relevance) == 3);
}

TEST_CASE("GenSco-stop applies the likelihood test from level 2 on") {
    World w;
    w.subqs = {"a?", "b?", "c?"};
    auto inst = testing::make_instance(3);

    SUBCASE("stops when the candidate makes the question less likely") {
        w.stop_nll = {{1, 1.0}, {2, 1.4}};
        auto r = run(w, inst, config(Variant::GenScoStop));
        CHECK(r.result.trace.stop_reason == StopReason::LikelihoodStop);
        CHECK(r.result.trace.levels.size() == 1);
        CHECK(calls(r.counters, CallPurpose::StopCriterion) == 2);
        // the test runs before any passage is scored for sub-question 2
        CHECK(calls(r.counters, CallPurpose::Relevance) == 3);
        CHECK(r.result.answer.context_order.size() == 1);
    }
    SUBCASE("equal sides continue") {
        w.stop_nll = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
        auto r = run(w, inst, config(Variant::GenScoStop));
        CHECK(r.result.trace.stop_reason == StopReason::FinKeyword);
        CHECK(r.result.trace.levels.size() == 3);
        CHECK(calls(r.counters, CallPurpose::StopCriterion) == 4);
    }
    SUBCASE("GenSco-max ignores the criterion") {
        w.stop_nll = {{1, 1.0}, {2, 1.4}};
        auto r = run(w, inst, config(Variant::GenScoMax));
        CHECK(r.result.trace.levels.size() == 3);
        CHECK(calls(r.counters, CallPurpose::StopCriterion) == 0);
    }
}

TEST_CASE("keyword check comes before the likelihood test") {
    World w;
    w.subqs = {"a?"};
    w.stop_nll = {};
    auto inst = testing::make_instance(2);
    auto r = run(w, inst, config(Variant::GenScoStop));
    CHECK(r.result.trace.stop_reason == StopReason::FinKeyword);
    CHECK(calls(r.counters, CallPurpose::StopCriterion) == 0);
}

TEST_CASE("GenSco-no-QD scores against the full question and stops on a repeated passage") {
    World w;
    auto inst = testing::make_instance(3);
    w.preferred = {{{inst.question, 2}, 0.1}};
    auto r = run(w, inst, config(Variant::GenScoNoQD));
    CHECK(r.result.trace.stop_reason == StopReason::RepeatedPassage);
    CHECK(r.result.trace.selected_sequence == std::vector<int>{2});
    CHECK(r.result.trace.levels[0].subquestion.text == inst.question);
    CHECK(calls(r.counters, CallPurpose::Decomposition) == 0);
    CHECK(calls(r.counters, CallPurpose::Relevance) == 6);
    CHECK(r.result.answer.method == "GenSco-no-QD");

    SUBCASE("dedupe removes selected passages from the pool") {
        auto cfg = config(Variant::GenScoNoQD);
        cfg.dedupe_pool = true;
        World w2;
        w2.preferred = w.preferred;
        auto d = run(w2, inst, cfg);
        CHECK(d.result.trace.selected_sequence == std::vector<int>{2, 1, 3});
        CHECK(d.result.trace.levels[1].candidates.size() == 2);
        CHECK(d.result.trace.levels[2].candidates.size() == 1);
        CHECK(calls(d.counters, CallPurpose::Relevance) == 6);
    }
}

TEST_CASE("an immediate keyword answers over an empty context") {
    World w;
    auto inst = testing::make_instance(3);
    auto r = run(w, inst, config(Variant::GenScoStop));
    CHECK(r.result.trace.levels.empty());
    CHECK(r.result.trace.empty_context);
    CHECK(r.result.answer.context_order.empty());
    CHECK(r.result.answer.predicted_answer == "Paris");
    REQUIRE(w.answer_prompts.size() == 1);
    CHECK(w.answer_prompts[0].find("Context: \nAnswer:") != std::string::npos);
}

TEST_CASE("shuffle ablation permutes the answering context only") {
    World w;
    w.subqs = {"a?", "b?", "c?"};
    w.preferred = {{{"a?", 4}, 0.1}, {{"b?", 2}, 0.1}, {{"c?", 3}, 0.1}};
    auto inst = testing::make_instance(4);
    auto cfg = config(Variant::GenScoMax);
    cfg.shuffle_context = true;
    cfg.shuffle_seed = 99;
    auto r = run(w, inst, cfg);
    const auto& sel = r.result.trace.selected_sequence;
    const auto& a = r.result.answer;
    CHECK(sel == std::vector<int>{4, 2, 3});
    REQUIRE(a.permutation.has_value());
    CHECK(a.context_order != sel);
    for (std::size_t i = 0; i < sel.size(); ++i) CHECK(a.context_order[i] == sel[(*a.permutation)[i]]);
    CHECK(std::is_permutation(a.context_order.begin(), a.context_order.end(), sel.begin()));
    CHECK(a.method == "GenSco-max shuffled");
    std::string expected = "Context: ";
    for (std::size_t i = 0; i < a.context_order.size(); ++i) {
        auto idx = std::to_string(a.context_order[i]);
        expected += (i ? " Title " : "Title ") + idx + ": Body text " + idx + ".";
    }
    CHECK(w.answer_prompts.at(0).find(expected + "\nAnswer:") != std::string::npos);

    World again = w;
    again.answer_prompts.clear();
    CHECK(run(again, inst, cfg).result.answer == a);
}

TEST_CASE("invalid input is rejected before any call") {
    World w;
    auto inst = testing::make_instance(2);
    inst.question = " ";
    auto b = w.backend();
    LlmGateway gw(b, b, nullptr);
    PipelineContext ctx{gw, TemplateSet::builtin(), {}};
    CHECK_THROWS_AS(run_instance(inst, config(Variant::GenScoMax), ctx), Error);
    CHECK(gw.counters().requests(Role::Generator) == 0);
    auto ok = testing::make_instance(2);
    CHECK_THROWS_AS(run_instance(ok, config(Variant::GenScoMax, 0), ctx), Error);
}
