#pragma once

#include "gensco/config.hpp"
#include "gensco/evaluation.hpp"
#include "gensco/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gensco {

/// Run directory layout.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTracesFile = "traces.jsonl";
inline constexpr const char* kAnswersFile = "answers.jsonl";
inline constexpr const char* kFailuresFile = "failures.jsonl";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportCsvFile = "report.csv";

/// Counters and timestamps for one `run` invocation over a directory.
struct RunInvocation {
    std::string started_at;
    std::string finished_at;
    std::size_t attempted = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;
    CallCounters counters;
};

struct RunManifest {
    std::string run_id;
    nlohmann::json config;
    std::string dataset_digest;
    std::string generator_backend;
    std::string scorer_backend;
    std::string started_at;
    std::string finished_at;
    /// "running", "partial" or "complete"
    std::string status = "running";
    std::size_t instances = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::vector<RunInvocation> invocations;

    /// Sum over invocations.
    CallCounters total_counters() const;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    static RunManifest load(const std::string& run_dir);
};

struct RunOptions {
    /// Process at most this many pending instances, then stop (staged runs).
    std::optional<std::size_t> stop_after;
    /// Progress lines on stderr.
    bool verbose = false;
};

struct RunOutcome {
    std::size_t instances = 0;
    std::size_t skipped = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;
    bool finished = false;
    /// 0 ok, 1 some instances failed
    int exit_code() const { return failed ? 1 : 0; }
};

/// Runs (or resumes) the configured method over the dataset, writing records
/// to `out_dir` as they complete. Instances already answered are skipped.
/// When every instance is done the record files are rewritten in dataset
/// order and the report is produced.
RunOutcome cmd_run(const RunConfig& cfg, const std::string& out_dir, const RunOptions& options = {});

/// Recomputes the report from the run directory alone (plus the dataset the
/// manifest names). Throws CorruptTrace for missing or malformed records.
EvalReport cmd_eval(const std::string& run_dir);

/// Writes scatter.csv, scatter_pearson.csv, delta_hops.csv and subsets.csv
/// into `out_dir`, one block of rows per run.
void cmd_plotdata(std::span<const std::string> run_dirs, const std::string& out_dir);

struct Record {
    int line = 0;
    nlohmann::json value;
};

/// Reads a JSON-lines record file; a final line without a newline is treated
/// as torn and dropped. Throws CorruptTrace naming the line of any bad record.
std::vector<Record> read_records(const std::string& path);

} // namespace gensco
