#include "gensco/synthetic.hpp"

#include "gensco/baselines.hpp"
#include "gensco/error.hpp"
#include "gensco/util.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace gensco {

namespace {

constexpr std::array kAdjectives{"Silent", "Crimson", "Hidden", "Last", "Broken", "Golden", "Distant", "Frozen",
                                 "Wandering", "Hollow", "Burning", "Quiet", "Forgotten", "Restless", "Painted",
                                 "Northern"};
constexpr std::array kNouns{"Harbor", "Orchard", "Lantern", "Frontier", "Garden", "Mirror", "River", "Tower",
                            "Meadow", "Voyage", "Citadel", "Canyon", "Parade", "Station", "Island", "Compass"};
constexpr std::array kFirst{"Amara", "Bruno", "Celia", "Dmitri", "Elena", "Farid", "Greta", "Hiro", "Ines",
                            "Jonas", "Kalina", "Luca", "Mira", "Nikolai", "Olga", "Pavel", "Rosa", "Soren",
                            "Tamsin", "Viktor"};
constexpr std::array kLast{"Achterberg", "Balogun", "Castellanos", "Delacroix", "Eriksen", "Falconer", "Grimaldi",
                           "Halvorsen", "Ivanova", "Jaramillo", "Kowalski", "Lindqvist", "Moreau", "Nakamura",
                           "Okonkwo", "Petrakis", "Quintero", "Rasmussen", "Szabo", "Tanaka"};
constexpr std::array kCities{"Porto", "Leeds", "Graz", "Tampere", "Bergen", "Lyon", "Krakow", "Utrecht", "Bilbao",
                             "Ghent", "Brno", "Aarhus", "Turin", "Cork", "Split", "Malmo"};
constexpr std::array kCountries{"Portugal", "England", "Austria", "Finland", "Norway", "France", "Poland",
                                "Netherlands", "Spain", "Belgium", "Czechia", "Denmark", "Italy", "Ireland",
                                "Croatia", "Sweden"};
constexpr std::array kGenres{"drama", "comedy", "thriller", "documentary", "western", "musical"};

struct Person {
    std::string name;
    int born = 0;
    std::size_t city = 0;
};

struct Film {
    std::string title;
    int year = 0;
    std::string genre;
    std::size_t director = 0;
};

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_.below(n)); }
    bool chance(double p) { return static_cast<double>(rng_.below(1000000)) < p * 1000000.0; }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng_.below(1000000)) / 1000000.0;
    }
    template <typename T>
    void shuffle(std::vector<T>& v) { rng_.shuffle(v); }

private:
    SeededRng rng_;
};

std::vector<std::size_t> distinct(Draw& d, std::size_t pool, std::size_t n) {
    std::vector<std::size_t> all(pool);
    for (std::size_t i = 0; i < pool; ++i) all[i] = i;
    d.shuffle(all);
    all.resize(n);
    return all;
}

std::string pad(std::size_t n, std::size_t width) {
    auto s = std::to_string(n);
    return std::string(s.size() < width ? width - s.size() : 0, '0') + s;
}

std::pair<MultiHopInstance, PlannedRun> draw_instance(const SyntheticOptions& options, const PipelineConfig& cfg,
                                                      const std::string& id, int attempt);

} // namespace

SyntheticCorpus make_synthetic(const SyntheticOptions& options, const PipelineConfig& cfg) {
    if (options.distractors < 1) throw Error(ErrorCode::InvalidArgument, "synthetic corpus needs distractors");
    const std::size_t people = static_cast<std::size_t>(options.distractors) + 1;
    if (people > kCities.size() || people > kFirst.size()) {
        throw Error(ErrorCode::InvalidArgument, "too many distractors for the name pools");
    }
    SyntheticCorpus corpus;
    const std::size_t width = std::to_string(options.count).size();
    // request fingerprint -> scripted response, across the whole corpus
    std::map<std::pair<Role, std::string>, std::string> responses;
    for (std::size_t n = 0; n < options.count; ++n) {
        const std::string id = options.id_prefix + "-" + pad(n + 1, std::max<std::size_t>(width, 3));
        for (int attempt = 0;; ++attempt) {
            if (attempt == 100) throw Error(ErrorCode::InvalidArgument, "cannot draw a conflict-free instance " + id);
            auto [inst, plan] = draw_instance(options, cfg, id, attempt);
            // two instances may render an identical request; redraw unless the
            // scripted answers agree
            ScriptBuilder builder(cfg);
            builder.plan(inst, plan);
            std::vector<std::pair<std::pair<Role, std::string>, std::string>> mine;
            bool clash = false;
            for (const auto& e : builder.entries()) {
                auto key = std::make_pair(e.role, e.fingerprint);
                auto value = e.role == Role::Generator ? e.text : nlohmann::json(e.token_logprobs).dump();
                auto it = responses.find(key);
                if (it != responses.end() && it->second != value) {
                    clash = true;
                    break;
                }
                mine.emplace_back(std::move(key), std::move(value));
            }
            if (clash) continue;
            for (auto& [k, v] : mine) responses.emplace(std::move(k), std::move(v));
            corpus.instances.push_back(std::move(inst));
            corpus.plans.push_back(std::move(plan));
            break;
        }
    }
    return corpus;
}

namespace {

std::pair<MultiHopInstance, PlannedRun> draw_instance(const SyntheticOptions& options, const PipelineConfig& cfg,
                                                      const std::string& id, int attempt) {
    const std::size_t people = static_cast<std::size_t>(options.distractors) + 1;
    {
        MultiHopInstance inst;
        inst.id = id;
        inst.dataset = Dataset::Synthetic;
        Draw d(seed_from(options.seed, attempt == 0 ? id : id + "#" + std::to_string(attempt)));

        const bool three_hop = d.chance(options.three_hop_rate);
        auto firsts = distinct(d, kFirst.size(), people);
        auto lasts = distinct(d, kLast.size(), people);
        auto cities = distinct(d, kCities.size(), people);
        auto adjs = distinct(d, kAdjectives.size(), people);
        auto nouns = distinct(d, kNouns.size(), people);

        std::vector<Person> persons;
        std::vector<Film> films;
        for (std::size_t i = 0; i < people; ++i) {
            persons.push_back({std::string(kFirst[firsts[i]]) + " " + kLast[lasts[i]],
                               1940 + static_cast<int>(d.index(50)), cities[i]});
            films.push_back({std::string("The ") + kAdjectives[adjs[i]] + " " + kNouns[nouns[i]],
                             1970 + static_cast<int>(d.index(50)), kGenres[d.index(kGenres.size())], i});
        }
        // entity 0 is the chain; the rest are distractors
        struct Draft {
            std::string title, body;
            int kind = 0; // 0 film, 1 person, 2 city
            std::size_t entity = 0;
        };
        std::vector<Draft> drafts;
        for (std::size_t i = 0; i < people; ++i) {
            const auto& f = films[i];
            drafts.push_back({f.title,
                              f.title + " is a " + std::to_string(f.year) + " " + f.genre + " film directed by " +
                                  persons[f.director].name + ".",
                              0, i});
            const auto& p = persons[i];
            drafts.push_back({p.name,
                              p.name + " (born " + std::to_string(p.born) + ") is a film director born in " +
                                  kCities[p.city] + ".",
                              1, i});
        }
        if (three_hop) {
            for (std::size_t i = 0; i < 2; ++i) {
                const auto c = persons[i].city;
                drafts.push_back({kCities[c], std::string(kCities[c]) + " is a city in " + kCountries[c] + ".", 2, i});
            }
        }
        d.shuffle(drafts);
        std::vector<int> film_idx(people), person_idx(people), city_idx(people, 0);
        for (std::size_t i = 0; i < drafts.size(); ++i) {
            const int idx = static_cast<int>(i) + 1;
            inst.passages.push_back({idx, drafts[i].title, drafts[i].body});
            if (drafts[i].kind == 0) film_idx[drafts[i].entity] = idx;
            if (drafts[i].kind == 1) person_idx[drafts[i].entity] = idx;
            if (drafts[i].kind == 2) city_idx[drafts[i].entity] = idx;
        }

        const auto& film = films[0];
        const auto& director = persons[0];
        const std::string city = kCities[director.city];
        const std::string country = kCountries[director.city];
        std::vector<std::string> subqs{"Who directed the film " + film.title + "?",
                                       "Where was " + director.name + " born?"};
        std::vector<int> chain{film_idx[0], person_idx[0]};
        if (three_hop) {
            inst.question = "In which country was the director of the film " + film.title + " born?";
            inst.gold_answer = country;
            subqs.push_back("Which country is " + city + " in?");
            chain.push_back(city_idx[0]);
        } else {
            inst.question = "Where was the director of the film " + film.title + " born?";
            inst.gold_answer = city;
        }
        inst.supporting_indices = std::set<int>(chain.begin(), chain.end());

        PlannedRun plan;
        const int depth = std::min<int>(static_cast<int>(chain.size()), cfg.max_levels);
        int levels = depth;
        bool early_stop = false;
        if (cfg.variant == Variant::GenScoStop && depth >= 2 && d.chance(0.2)) {
            levels = depth - 1;
            early_stop = true;
        }
        bool path_correct = true;
        for (int l = 0; l < levels; ++l) {
            PlannedLevel lv;
            lv.subquestion = subqs[static_cast<std::size_t>(l)];
            lv.chosen = chain[static_cast<std::size_t>(l)];
            if (d.chance(options.wrong_passage_rate)) {
                // the matching passage of a distractor entity
                const std::size_t other = 1 + d.index(people - 1);
                const int alt = l == 0 ? film_idx[other] : (l == 1 ? person_idx[other] : city_idx[1]);
                if (alt != 0) {
                    lv.chosen = alt;
                    path_correct = false;
                }
            }
            for (const auto& p : inst.passages) {
                lv.scores[p.index] = p.index == lv.chosen ? d.uniform(0.05, 0.45) : d.uniform(0.5, 3.0);
            }
            if (cfg.variant == Variant::GenScoStop && l >= 1) {
                const double without = d.uniform(1.0, 2.0);
                lv.stop = StopSides{without, without - d.uniform(0.0, 0.5)};
            }
            plan.levels.push_back(std::move(lv));
        }

        if (cfg.variant == Variant::GenScoNoQD) {
            plan.end = PlannedEnd::RepeatedPassage;
            plan.end_choice = plan.levels.front().chosen;
        } else if (early_stop) {
            plan.end = PlannedEnd::LikelihoodStop;
            plan.end_subquestion = subqs[static_cast<std::size_t>(levels)];
            const double without = d.uniform(1.0, 2.0);
            plan.end_stop = StopSides{without, without + d.uniform(0.01, 0.5)};
        } else if (d.chance(0.15)) {
            plan.end = PlannedEnd::RepeatedSubQuestion;
            plan.end_subquestion = subqs.front();
        }

        const bool full = path_correct && levels == static_cast<int>(chain.size());
        if (!full) {
            // answer from whatever the last chosen passage suggests
            plan.answer = path_correct ? director.name : kCities[persons[1 + d.index(people - 1)].city];
        } else if (d.chance(options.wrong_answer_rate)) {
            switch (d.index(3)) {
            case 0: plan.answer = three_hop ? city : city + ", " + country; break;
            case 1: plan.answer = "Unknown"; break;
            default: plan.answer = kCities[persons[1].city]; break;
            }
        } else {
            plan.answer = inst.gold_answer;
        }

        validate_instance(inst);
        return {std::move(inst), std::move(plan)};
    }
}

} // namespace

std::vector<ScriptEntry> synthetic_script(const SyntheticCorpus& corpus, const PipelineConfig& cfg,
                                          const TemplateSet& templates, const std::vector<ShotExample>& shots,
                                          std::optional<std::size_t> bm25_top_k) {
    ScriptBuilder builder(cfg, templates, shots);
    for (std::size_t i = 0; i < corpus.instances.size(); ++i) builder.plan(corpus.instances[i], corpus.plans[i]);
    if (bm25_top_k) {
        for (const auto& inst : corpus.instances) {
            std::vector<Passage> context;
            std::set<int> got;
            for (const auto& r : top_k(bm25_rank(inst.question, inst.passages), *bm25_top_k)) {
                context.push_back(r.passage);
                got.insert(r.passage.index);
            }
            const bool covered = std::includes(got.begin(), got.end(), inst.supporting_indices->begin(),
                                               inst.supporting_indices->end());
            builder.add_generation(render_answer_prompt(inst.question, context, shots, templates, true),
                                   covered ? inst.gold_answer : "Unknown", inst.id + " bm25 answer");
        }
    }
    return builder.take();
}

} // namespace gensco
