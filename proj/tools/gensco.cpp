#include "gensco/config.hpp"
#include "gensco/error.hpp"
#include "gensco/run.hpp"
#include "gensco/synthetic.hpp"
#include "gensco/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitFatal = 2;

struct SynthArgs {
    std::string out;
    std::size_t count = 50;
    std::uint64_t seed = 1;
    std::string variant = "GenSco-stop";
    int max_levels = 5;
    int distractors = 4;
};

int run_synth(const SynthArgs& a) {
    using namespace gensco;
    SyntheticOptions opts;
    opts.count = a.count;
    opts.seed = a.seed;
    opts.distractors = a.distractors;
    auto cfg = PipelineConfig::defaults_for(Dataset::Synthetic, parse_variant(a.variant));
    cfg.max_levels = a.max_levels;
    cfg.shots = 0;
    auto corpus = make_synthetic(opts, cfg);
    auto script = synthetic_script(corpus, cfg, TemplateSet::builtin(), {}, std::size_t{5});

    fs::create_directories(a.out);
    write_file_atomic((fs::path(a.out) / "dataset.jsonl").string(), to_hotpot_jsonl(corpus.instances));
    write_file_atomic((fs::path(a.out) / "script.jsonl").string(), write_script(std::move(script)));
    nlohmann::json config{{"method", std::string(to_string(cfg.variant))},
                          {"dataset", {{"kind", "synthetic"}, {"path", "dataset.jsonl"}}},
                          {"pipeline", {{"max_levels", cfg.max_levels}, {"shots", 0}}},
                          {"top_k", 5},
                          {"generator", {{"type", "scripted"}, {"script", "script.jsonl"}}},
                          {"scorer", {{"type", "scripted"}, {"script", "script.jsonl"}}}};
    write_file_atomic((fs::path(a.out) / "config.json").string(), config.dump(2) + "\n");
    std::cout << "wrote " << corpus.instances.size() << " instances to " << a.out << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generator/scorer passage selection for multi-hop QA"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    gensco::RunOverrides overrides;
    std::optional<std::size_t> stop_after;
    bool verbose = false;
    auto* run = app.add_subcommand("run", "Run a method over a dataset (resumes an existing run directory)");
    run->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Run directory")->required();
    run->add_option("--dataset", overrides.dataset_path, "Dataset file, overrides dataset.path");
    run->add_option("--variant", overrides.variant, "Method: GenSco-max, GenSco-stop, GenSco-no-QD, bm25, ranking-file");
    run->add_option("--limit", overrides.limit, "Use only this many instances");
    run->add_option("--seed", overrides.seed, "Seed for the instance sample and the shuffle ablation");
    run->add_option("--concurrency", overrides.concurrency, "Instances processed in parallel");
    run->add_option("--cache-dir", overrides.cache_dir, "Response cache directory");
    run->add_option("--backend-generator-url", overrides.generator_url, "OpenAI-compatible base URL for the generator");
    run->add_option("--backend-scorer-url", overrides.scorer_url, "OpenAI-compatible base URL for the scorer");
    run->add_option("--stop-after", stop_after, "Stop after this many pending instances");
    run->add_flag("-v,--verbose", verbose, "Per-instance progress on stderr");

    std::string eval_dir;
    auto* eval = app.add_subcommand("eval", "Recompute report.json and report.csv for a run directory");
    eval->add_option("run_dir", eval_dir, "Run directory")->required();

    std::vector<std::string> plot_dirs;
    std::string plot_out;
    auto* plot = app.add_subcommand("plotdata", "Emit scatter, delta-hops and subset tables for runs");
    plot->add_option("--out", plot_out, "Output directory")->required();
    plot->add_option("run_dirs", plot_dirs, "Run directories")->required();

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset, matching script and config");
    synth->add_option("--out", synth_args.out, "Output directory")->required();
    synth->add_option("--count", synth_args.count, "Number of instances");
    synth->add_option("--seed", synth_args.seed, "Generator seed");
    synth->add_option("--variant", synth_args.variant, "Variant the script is built for");
    synth->add_option("--max-levels", synth_args.max_levels, "Level limit");
    synth->add_option("--distractors", synth_args.distractors, "Distractor entities per instance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitFatal;
    }

    try {
        if (*run) {
            auto cfg = gensco::RunConfig::load(config_path);
            gensco::apply_overrides(cfg, overrides);
            gensco::RunOptions opts;
            opts.stop_after = stop_after;
            opts.verbose = verbose;
            auto outcome = gensco::cmd_run(cfg, out_dir, opts);
            std::cout << "instances " << outcome.instances << ", skipped " << outcome.skipped << ", completed "
                      << outcome.completed << ", failed " << outcome.failed
                      << (outcome.finished ? ", run complete" : ", run partial") << "\n";
            return outcome.failed ? kExitFailures : kExitOk;
        }
        if (*eval) {
            auto report = gensco::cmd_eval(eval_dir);
            std::cout << gensco::report_to_json(report).at("metrics").dump(2) << "\n";
            return kExitOk;
        }
        if (*plot) {
            gensco::cmd_plotdata(plot_dirs, plot_out);
            return kExitOk;
        }
        if (*synth) return run_synth(synth_args);
    } catch (const std::exception& e) {
        std::cerr << "gensco: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}
