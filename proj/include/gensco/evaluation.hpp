#pragma once

#include "gensco/domain.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gensco {

struct AnswerMetrics {
    double em = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct RetrievalMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// |supporting| - |unique selected|
    int delta_hops = 0;
};

/// Lower-case, drop ASCII punctuation, drop the words a/an/the, collapse
/// whitespace. Same rule set as the SQuAD reference script.
std::string normalize_answer(std::string_view text);

/// Whitespace tokens of the normalized text.
std::vector<std::string> answer_tokens(std::string_view text);

/// Multiset token overlap. Two empty answers score 1 everywhere; one empty
/// answer scores 0 everywhere.
AnswerMetrics answer_metrics(std::string_view predicted, std::string_view gold);

/// Fraction of distinct predicted tokens that occur anywhere in the passages
/// (as rendered into the answer prompt). 0 for an empty prediction.
double k_precision(std::string_view predicted, std::span<const Passage> passages);

/// Set metrics over unique selected indices. Empty selection gives P = 0;
/// an empty support set gives R = 0.
RetrievalMetrics retrieval_metrics(std::span<const int> selected, const std::set<int>& supporting);
/// Throws MissingSupports when the instance has no labels.
RetrievalMetrics retrieval_metrics(std::span<const int> selected, const std::optional<std::set<int>>& supporting);

/// Sample Pearson correlation. Throws InvalidArgument for mismatched or short
/// inputs and DegenerateVariance when either side is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Everything measured for one answered instance.
struct InstanceEval {
    std::string instance_id;
    AnswerMetrics answer;
    double k_precision = 0.0;
    std::optional<RetrievalMetrics> retrieval;
    int selected_count = 0;
    std::optional<int> supporting_count;
};

/// Scores an answer record against its instance; the passages of the final
/// prompt are those in `answer.context_order`.
InstanceEval evaluate_instance(const MultiHopInstance& inst, const AnswerRecord& answer);

/// Means as fractions in [0, 1]. Retrieval means cover only instances with
/// supporting labels.
struct MetricMeans {
    std::size_t count = 0;
    double em = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double k_precision = 0.0;
    std::size_t retrieval_count = 0;
    double retrieval_precision = 0.0;
    double retrieval_recall = 0.0;
    double retrieval_f1 = 0.0;
    double mean_selected = 0.0;
};

MetricMeans mean_metrics(std::span<const InstanceEval> rows);

struct DeltaHopsBucket {
    int supporting = 0;
    int delta = 0;
    std::size_t count = 0;
};

struct SubsetReport {
    std::size_t size = 0;
    MetricMeans metrics;
};

struct EvalOptions {
    std::vector<std::size_t> subset_sizes;
    std::uint64_t subset_seed = 0;
};

struct EvalReport {
    std::string method;
    MetricMeans overall;
    /// Sorted by (supporting, delta).
    std::vector<DeltaHopsBucket> delta_hops;
    std::vector<SubsetReport> subsets;
    /// Pearson(k_precision, f1) across instances; absent when undefined.
    std::optional<double> pearson_k_precision_f1;
    std::vector<InstanceEval> instances;
};

/// Requires at least one row. Subsets are nested seeded samples of the rows.
EvalReport aggregate(std::span<const InstanceEval> rows, const std::string& method, const EvalOptions& options = {});

/// Structured report: percentages (x100) under "metrics", fractions under
/// "metrics_raw". Contains no timestamps so reruns are byte-identical.
nlohmann::json report_to_json(const EvalReport& report);

/// One row per instance, header first.
std::string report_to_csv(const EvalReport& report);

/// Parses the per-instance rows written by report_to_csv.
std::vector<InstanceEval> instances_from_csv(std::string_view csv);

} // namespace gensco
