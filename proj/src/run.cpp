#include "gensco/run.hpp"

#include "gensco/baselines.hpp"
#include "gensco/dataset.hpp"
#include "gensco/error.hpp"
#include "gensco/http_backend.hpp"
#include "gensco/pipeline.hpp"
#include "gensco/scripted_backend.hpp"
#include "gensco/util.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace gensco {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string path_in(const std::string& dir, const char* file) { return (fs::path(dir) / file).string(); }

json invocation_to_json(const RunInvocation& r) {
    return {{"started_at", r.started_at}, {"finished_at", r.finished_at}, {"attempted", r.attempted},
            {"completed", r.completed},   {"failed", r.failed},           {"counters", r.counters.to_json()}};
}

RunInvocation invocation_from_json(const json& j) {
    RunInvocation r;
    r.started_at = j.at("started_at").get<std::string>();
    r.finished_at = j.at("finished_at").get<std::string>();
    r.attempted = j.at("attempted").get<std::size_t>();
    r.completed = j.at("completed").get<std::size_t>();
    r.failed = j.at("failed").get<std::size_t>();
    r.counters = CallCounters::from_json(j.at("counters"));
    return r;
}

// Settings that may change between a run and its resumption without
// affecting any result.
json resumable_view(json config) {
    for (const char* k : {"concurrency", "max_in_flight", "cache_dir"}) config.erase(k);
    config["pipeline"].erase("parallel_scoring");
    return config;
}

std::shared_ptr<LlmBackend> make_backend(const BackendConfig& b, const std::string& field) {
    check_backend(b, field);
    if (b.type == "http") {
        HttpBackendConfig h;
        h.base_url = b.url;
        h.model = b.model;
        h.api_key = b.api_key;
        h.max_prompt_chars = b.max_prompt_chars;
        return std::make_shared<HttpCompletionBackend>(h);
    }
    auto s = std::make_shared<ScriptedBackend>(ScriptedBackend::load(b.script));
    if (b.max_prompt_chars) s->set_max_prompt_chars(b.max_prompt_chars);
    return s;
}

std::string lines_of(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

// Rewrites a record file keeping only the given ids (first record per id),
// ordered by `order`.
void rewrite_ordered(const std::string& path, const std::vector<Record>& records,
                     const std::map<std::string, std::size_t>& order) {
    std::map<std::size_t, json> kept;
    for (const auto& r : records) {
        auto it = order.find(r.value.at("instance_id").get<std::string>());
        if (it != order.end()) kept.emplace(it->second, r.value);
    }
    std::vector<json> out;
    for (auto& [_, v] : kept) out.push_back(std::move(v));
    write_file_atomic(path, lines_of(out));
}

struct LoadedRun {
    RunManifest manifest;
    RunConfig config;
    std::vector<MultiHopInstance> instances;
};

LoadedRun load_run(const std::string& run_dir) {
    LoadedRun run;
    run.manifest = RunManifest::load(run_dir);
    try {
        run.config = RunConfig::from_json(run.manifest.config, run_dir);
    } catch (const Error& e) {
        throw Error(ErrorCode::CorruptTrace, std::string(kManifestFile) + ": " + e.what());
    }
    run.instances = load_dataset(run.config.dataset);
    if (dataset_digest(run.config.dataset.path) != run.manifest.dataset_digest) {
        throw Error(ErrorCode::ConfigError, "dataset " + run.config.dataset.path + " changed since the run started");
    }
    return run;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

CallCounters RunManifest::total_counters() const {
    CallCounters total;
    for (const auto& inv : invocations) total += inv.counters;
    return total;
}

json RunManifest::to_json() const {
    json inv = json::array();
    for (const auto& i : invocations) inv.push_back(invocation_to_json(i));
    return {{"run_id", run_id},
            {"config", config},
            {"dataset_digest", dataset_digest},
            {"generator_backend", generator_backend},
            {"scorer_backend", scorer_backend},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"status", status},
            {"instances", instances},
            {"completed", completed},
            {"failed", failed},
            {"counters", total_counters().to_json()},
            {"invocations", inv}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config = j.at("config");
    m.dataset_digest = j.at("dataset_digest").get<std::string>();
    m.generator_backend = j.at("generator_backend").get<std::string>();
    m.scorer_backend = j.at("scorer_backend").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.instances = j.at("instances").get<std::size_t>();
    m.completed = j.at("completed").get<std::size_t>();
    m.failed = j.at("failed").get<std::size_t>();
    for (const auto& i : j.at("invocations")) m.invocations.push_back(invocation_from_json(i));
    return m;
}

RunManifest RunManifest::load(const std::string& run_dir) {
    const auto path = path_in(run_dir, kManifestFile);
    if (!fs::exists(path)) throw Error(ErrorCode::CorruptTrace, "no " + std::string(kManifestFile) + " in " + run_dir);
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptTrace, path + ": " + e.what());
    }
}

std::vector<Record> read_records(const std::string& path) {
    std::vector<Record> out;
    if (!fs::exists(path)) return out;
    const auto text = read_file(path);
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break; // torn tail from an interrupted write
        ++lineno;
        std::string_view line(text.data() + pos, nl - pos);
        pos = nl + 1;
        if (trim(line).empty()) continue;
        try {
            out.push_back({lineno, json::parse(line)});
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::CorruptTrace, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

RunOutcome cmd_run(const RunConfig& config, const std::string& out_dir, const RunOptions& options) {
    RunConfig cfg = config;
    load_credentials(cfg);
    const auto pcfg = cfg.pipeline();
    const bool gensco = cfg.method.kind == MethodKind::GenSco;

    auto instances = load_dataset(cfg.dataset);
    std::map<std::string, std::size_t> order;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!order.emplace(instances[i].id, i).second) {
            throw Error(ErrorCode::SchemaError, "duplicate instance id " + instances[i].id);
        }
    }

    auto generator = make_backend(cfg.generator, "generator");
    auto scorer = gensco ? make_backend(cfg.scorer, "scorer") : generator;
    std::shared_ptr<ResponseCache> cache;
    if (!cfg.cache_dir.empty()) cache = std::make_shared<DiskCache>(cfg.cache_dir);
    else cache = std::make_shared<MemoryCache>();
    GatewayOptions gopts;
    gopts.max_in_flight = cfg.max_in_flight;
    LlmGateway gateway(generator, scorer, cache, gopts);

    const TemplateSet templates = cfg.templates_dir.empty() ? TemplateSet::builtin() : TemplateSet::load(cfg.templates_dir);
    std::vector<ShotExample> shots;
    if (pcfg.shots > 0) {
        if (cfg.shots_file.empty()) {
            throw Error(ErrorCode::ConfigError, "field 'shots_file' is required when pipeline.shots > 0");
        }
        shots = ShotBank::load(cfg.shots_file).take(pcfg.shots);
    }
    PipelineContext ctx{gateway, templates, shots};
    std::map<std::string, std::vector<int>> rankings;
    if (cfg.method.kind == MethodKind::RankingFile) rankings = load_rankings(cfg.ranking_file);

    // manifest: new, or resumed from an identical configuration
    fs::create_directories(out_dir);
    const auto manifest_path = path_in(out_dir, kManifestFile);
    const auto snapshot = cfg.to_json();
    const auto digest = dataset_digest(cfg.dataset.path);
    RunManifest manifest;
    if (fs::exists(manifest_path)) {
        manifest = RunManifest::load(out_dir);
        if (resumable_view(manifest.config) != resumable_view(snapshot)) {
            throw Error(ErrorCode::ConfigError, out_dir + " holds a run with a different configuration");
        }
        if (manifest.dataset_digest != digest) {
            throw Error(ErrorCode::ConfigError, out_dir + " holds a run over a different dataset file");
        }
        manifest.config = snapshot;
    } else {
        manifest.run_id = fs::absolute(out_dir).lexically_normal().filename().string();
        if (manifest.run_id.empty()) manifest.run_id = fs::absolute(out_dir).lexically_normal().parent_path().filename().string();
        manifest.config = snapshot;
        manifest.dataset_digest = digest;
        manifest.started_at = now_utc();
    }
    manifest.generator_backend = generator->id();
    manifest.scorer_backend = gensco ? scorer->id() : "";
    manifest.instances = instances.size();
    manifest.status = "running";

    // completed instances are those with an answer record; drop stray traces
    const auto traces_path = path_in(out_dir, kTracesFile);
    const auto answers_path = path_in(out_dir, kAnswersFile);
    std::set<std::string> done;
    std::map<std::string, std::size_t> done_order;
    const auto old_answers = read_records(answers_path);
    for (const auto& r : old_answers) {
        std::string id;
        try {
            id = r.value.at("instance_id").get<std::string>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::CorruptTrace, answers_path + ":" + std::to_string(r.line) + ": no instance_id");
        }
        auto it = order.find(id);
        if (it == order.end()) {
            throw Error(ErrorCode::CorruptTrace,
                        answers_path + ":" + std::to_string(r.line) + ": unknown instance " + id);
        }
        if (done.insert(id).second) done_order.emplace(id, done_order.size());
    }
    rewrite_ordered(answers_path, old_answers, done_order);
    if (gensco) rewrite_ordered(traces_path, read_records(traces_path), done_order);
    else write_file_atomic(traces_path, "");

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!done.count(instances[i].id)) pending.push_back(i);
    }
    const std::size_t skipped = instances.size() - pending.size();
    if (options.stop_after && *options.stop_after < pending.size()) pending.resize(*options.stop_after);

    RunInvocation invocation;
    invocation.started_at = now_utc();
    invocation.attempted = pending.size();
    write_file_atomic(manifest_path, manifest.to_json().dump(2) + "\n");
    write_file_atomic(path_in(out_dir, kFailuresFile), "");

    std::ofstream traces(traces_path, std::ios::app | std::ios::binary);
    std::ofstream answers(answers_path, std::ios::app | std::ios::binary);
    std::ofstream failures(path_in(out_dir, kFailuresFile), std::ios::app | std::ios::binary);
    std::mutex out_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0}, failed{0};

    auto process = [&](const MultiHopInstance& inst) {
        std::optional<SelectionTrace> trace;
        AnswerRecord answer;
        if (gensco) {
            auto result = run_instance(inst, pcfg, ctx);
            trace = std::move(result.trace);
            answer = std::move(result.answer);
        } else {
            validate_instance(inst);
            std::vector<Passage> context;
            if (cfg.method.kind == MethodKind::Bm25) {
                for (const auto& r : top_k(bm25_rank(inst.question, inst.passages), cfg.top_k)) {
                    context.push_back(r.passage);
                }
                answer.method = "bm25 top-" + std::to_string(cfg.top_k);
            } else {
                auto it = rankings.find(inst.id);
                if (it == rankings.end()) throw Error(ErrorCode::SchemaError, "no ranking for instance " + inst.id);
                for (int idx : top_k(it->second, cfg.top_k)) {
                    const Passage* p = inst.find_passage(idx);
                    if (!p) throw Error(ErrorCode::SchemaError, "ranking cites unknown passage " + std::to_string(idx));
                    context.push_back(*p);
                }
                answer.method = "ranking-file top-" + std::to_string(cfg.top_k);
            }
            answer.instance_id = inst.id;
            for (const auto& p : context) answer.context_order.push_back(p.index);
            answer.predicted_answer = answer_question(inst.question, context, pcfg, ctx);
            answer.generator_params = GeneratorParams{generator->id(), pcfg.temperature, static_cast<int>(shots.size())};
        }
        std::lock_guard lock(out_mu);
        if (trace) {
            traces << json(*trace).dump() << '\n';
            traces.flush();
        }
        answers << json(answer).dump() << '\n';
        answers.flush();
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= pending.size()) return;
            const auto& inst = instances[pending[k]];
            json failure;
            try {
                process(inst);
                ++completed;
                if (options.verbose) {
                    std::lock_guard lock(out_mu);
                    std::cerr << "done " << inst.id << "\n";
                }
                continue;
            } catch (const Error& e) {
                failure = {{"instance_id", inst.id}, {"code", to_string(e.code())}, {"message", e.what()}};
            } catch (const std::exception& e) {
                failure = {{"instance_id", inst.id}, {"code", "Internal"}, {"message", e.what()}};
            }
            ++failed;
            std::lock_guard lock(out_mu);
            failures << failure.dump() << '\n';
            failures.flush();
            if (options.verbose) std::cerr << "failed " << inst.id << ": " << failure["message"].get<std::string>() << "\n";
        }
    };

    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), pending.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < width; ++i) pool.emplace_back(worker);
    if (width > 0) worker();
    for (auto& t : pool) t.join();
    traces.close();
    answers.close();
    failures.close();

    RunOutcome outcome;
    outcome.instances = instances.size();
    outcome.skipped = skipped;
    outcome.completed = completed;
    outcome.failed = failed;
    outcome.finished = skipped + outcome.completed == instances.size();

    // canonical order once everything is in, so staged runs match one-shot runs
    const auto answer_records = read_records(answers_path);
    if (outcome.finished) {
        rewrite_ordered(answers_path, answer_records, order);
        if (gensco) rewrite_ordered(traces_path, read_records(traces_path), order);
    }

    invocation.finished_at = now_utc();
    invocation.completed = outcome.completed;
    invocation.failed = outcome.failed;
    invocation.counters = gateway.counters();
    manifest.invocations.push_back(invocation);
    manifest.completed = skipped + outcome.completed;
    manifest.failed = outcome.failed;
    manifest.status = outcome.finished ? "complete" : "partial";
    manifest.finished_at = invocation.finished_at;
    write_file_atomic(manifest_path, manifest.to_json().dump(2) + "\n");

    if (outcome.finished && !answer_records.empty()) cmd_eval(out_dir);
    return outcome;
}

EvalReport cmd_eval(const std::string& run_dir) {
    if (!fs::is_directory(run_dir)) throw Error(ErrorCode::CorruptTrace, run_dir + " is not a run directory");
    auto run = load_run(run_dir);
    const auto pcfg = run.config.pipeline();

    const auto answers_path = path_in(run_dir, kAnswersFile);
    const auto answer_records = read_records(answers_path);
    if (answer_records.empty()) throw Error(ErrorCode::CorruptTrace, answers_path + ": no answer records");

    std::map<std::string, const MultiHopInstance*> by_id;
    for (const auto& inst : run.instances) by_id[inst.id] = &inst;

    std::map<std::string, AnswerRecord> answers;
    std::string method;
    for (const auto& r : answer_records) {
        AnswerRecord a;
        try {
            a = r.value.get<AnswerRecord>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::CorruptTrace, answers_path + ":" + std::to_string(r.line) + ": " + e.what());
        }
        if (!by_id.count(a.instance_id)) {
            throw Error(ErrorCode::CorruptTrace,
                        answers_path + ":" + std::to_string(r.line) + ": unknown instance " + a.instance_id);
        }
        if (method.empty()) method = a.method;
        answers.emplace(a.instance_id, std::move(a));
    }

    const auto traces_path = path_in(run_dir, kTracesFile);
    for (const auto& r : read_records(traces_path)) {
        SelectionTrace t;
        try {
            t = r.value.get<SelectionTrace>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::CorruptTrace, traces_path + ":" + std::to_string(r.line) + ": " + e.what());
        }
        if (!trace_is_consistent(t, pcfg.max_levels)) {
            throw Error(ErrorCode::CorruptTrace,
                        traces_path + ":" + std::to_string(r.line) + ": inconsistent trace for " + t.instance_id);
        }
    }

    std::vector<InstanceEval> rows;
    for (const auto& inst : run.instances) {
        auto it = answers.find(inst.id);
        if (it != answers.end()) rows.push_back(evaluate_instance(inst, it->second));
    }
    auto report = aggregate(rows, method, run.config.eval);
    write_file_atomic(path_in(run_dir, kReportJsonFile), report_to_json(report).dump(2) + "\n");
    write_file_atomic(path_in(run_dir, kReportCsvFile), report_to_csv(report));
    return report;
}

void cmd_plotdata(std::span<const std::string> run_dirs, const std::string& out_dir) {
    std::string scatter = "run,instance_id,k_precision,f1\n";
    std::string pearson_rows = "run,n,pearson\n";
    std::string hist = "run,supporting,delta,count\n";
    std::string subsets = "run,size,em,f1,precision,recall,k_precision\n";
    for (const auto& dir : run_dirs) {
        const auto manifest = RunManifest::load(dir);
        const auto csv_path = path_in(dir, kReportCsvFile);
        const auto json_path = path_in(dir, kReportJsonFile);
        if (!fs::exists(csv_path) || !fs::exists(json_path)) cmd_eval(dir);
        const auto rows = instances_from_csv(read_file(csv_path));
        const auto report = json::parse(read_file(json_path));
        const auto run = csv_cell(manifest.run_id);

        std::vector<double> kp, f1;
        for (const auto& r : rows) {
            scatter += run + "," + csv_cell(r.instance_id) + "," + format_double(r.k_precision) + "," +
                       format_double(r.answer.f1) + "\n";
            kp.push_back(r.k_precision);
            f1.push_back(r.answer.f1);
        }
        std::string r_cell;
        try {
            r_cell = format_double(pearson(kp, f1));
        } catch (const Error&) {
            r_cell.clear();
        }
        pearson_rows += run + "," + std::to_string(rows.size()) + "," + r_cell + "\n";

        for (const auto& b : report.at("delta_hops")) {
            hist += run + "," + std::to_string(b.at("supporting").get<int>()) + "," +
                    std::to_string(b.at("delta").get<int>()) + "," + std::to_string(b.at("count").get<std::size_t>()) +
                    "\n";
        }
        auto subset_row = [&](std::size_t size, const json& m) {
            subsets += run + "," + std::to_string(size) + "," + format_double(m.at("em").get<double>()) + "," +
                       format_double(m.at("f1").get<double>()) + "," + format_double(m.at("precision").get<double>()) +
                       "," + format_double(m.at("recall").get<double>()) + "," +
                       format_double(m.at("k_precision").get<double>()) + "\n";
        };
        for (const auto& s : report.at("subsets")) subset_row(s.at("size").get<std::size_t>(), s.at("metrics"));
        subset_row(rows.size(), report.at("metrics"));
    }
    fs::create_directories(out_dir);
    write_file_atomic(path_in(out_dir, "scatter.csv"), scatter);
    write_file_atomic(path_in(out_dir, "scatter_pearson.csv"), pearson_rows);
    write_file_atomic(path_in(out_dir, "delta_hops.csv"), hist);
    write_file_atomic(path_in(out_dir, "subsets.csv"), subsets);
}

} // namespace gensco
