#pragma once

#include "gensco/config.hpp"
#include "gensco/dataset.hpp"
#include "gensco/run.hpp"
#include "gensco/synthetic.hpp"
#include "gensco/util.hpp"
#include "support.hpp"

#include <string>

namespace testing {

/// A synthetic dataset plus matching script written to `dir`, and a config
/// that runs it with scripted backends and no shots.
struct SyntheticSetup {
    gensco::SyntheticCorpus corpus;
    gensco::RunConfig config;
};

inline SyntheticSetup write_synthetic(const std::string& dir, std::size_t count, std::uint64_t seed,
                                      gensco::Variant variant, std::string id_prefix = "syn") {
    using namespace gensco;
    RunConfig cfg;
    cfg.method = Method{MethodKind::GenSco, variant};
    cfg.dataset.dataset = Dataset::Synthetic;
    cfg.dataset.path = dir + "/dataset.jsonl";
    cfg.pipeline_keys = {{"max_levels", 5}, {"shots", 0}};
    cfg.generator.type = "scripted";
    cfg.generator.script = dir + "/script.jsonl";
    cfg.scorer = cfg.generator;

    SyntheticOptions opts;
    opts.count = count;
    opts.seed = seed;
    opts.id_prefix = std::move(id_prefix);
    auto corpus = make_synthetic(opts, cfg.pipeline());
    write_file_atomic(cfg.dataset.path, to_hotpot_jsonl(corpus.instances));
    write_file_atomic(cfg.generator.script,
                      write_script(synthetic_script(corpus, cfg.pipeline(), TemplateSet::builtin(), {}, 5)));
    return {std::move(corpus), std::move(cfg)};
}

inline std::string run_file(const std::string& run_dir, const char* name) {
    return gensco::read_file(run_dir + "/" + name);
}

inline std::size_t line_count(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace testing
