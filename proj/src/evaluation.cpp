#include "gensco/evaluation.hpp"

#include "gensco/dataset.hpp"
#include "gensco/error.hpp"
#include "gensco/prompts.hpp"
#include "gensco/util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gensco {

namespace {

bool is_ascii_punct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (is_space(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

} // namespace

std::string normalize_answer(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (unsigned char c : text) {
        if (is_ascii_punct(c)) continue;
        stripped.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    }
    std::vector<std::string> kept;
    for (auto& t : split_ws(stripped)) {
        if (t == "a" || t == "an" || t == "the") continue;
        kept.push_back(std::move(t));
    }
    return join(kept, " ");
}

std::vector<std::string> answer_tokens(std::string_view text) { return split_ws(normalize_answer(text)); }

AnswerMetrics answer_metrics(std::string_view predicted, std::string_view gold) {
    const auto pred = answer_tokens(predicted);
    const auto ref = answer_tokens(gold);
    AnswerMetrics m;
    m.em = normalize_answer(predicted) == normalize_answer(gold) ? 1.0 : 0.0;
    if (pred.empty() || ref.empty()) {
        const double v = pred.empty() && ref.empty() ? 1.0 : 0.0;
        m.f1 = m.precision = m.recall = v;
        return m;
    }
    std::map<std::string, int> counts;
    for (const auto& t : ref) ++counts[t];
    int common = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    m.precision = static_cast<double>(common) / static_cast<double>(pred.size());
    m.recall = static_cast<double>(common) / static_cast<double>(ref.size());
    m.f1 = harmonic(m.precision, m.recall);
    return m;
}

double k_precision(std::string_view predicted, std::span<const Passage> passages) {
    const auto pred = answer_tokens(predicted);
    if (pred.empty()) return 0.0;
    const auto ctx_tokens = answer_tokens(concat_passages(passages));
    const std::set<std::string> context(ctx_tokens.begin(), ctx_tokens.end());
    const std::set<std::string> types(pred.begin(), pred.end());
    std::size_t hit = 0;
    for (const auto& t : types) hit += context.count(t);
    return static_cast<double>(hit) / static_cast<double>(types.size());
}

RetrievalMetrics retrieval_metrics(std::span<const int> selected, const std::set<int>& supporting) {
    const std::set<int> unique(selected.begin(), selected.end());
    std::size_t hit = 0;
    for (int i : unique) hit += supporting.count(i);
    RetrievalMetrics m;
    m.precision = unique.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(unique.size());
    m.recall = supporting.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(supporting.size());
    m.f1 = harmonic(m.precision, m.recall);
    m.delta_hops = static_cast<int>(supporting.size()) - static_cast<int>(unique.size());
    return m;
}

RetrievalMetrics retrieval_metrics(std::span<const int> selected, const std::optional<std::set<int>>& supporting) {
    if (!supporting) throw Error(ErrorCode::MissingSupports, "instance has no supporting-passage labels");
    return retrieval_metrics(selected, *supporting);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "pearson inputs differ in length");
    if (xs.size() < 2) throw Error(ErrorCode::InvalidArgument, "pearson needs at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateVariance, "pearson input has zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

InstanceEval evaluate_instance(const MultiHopInstance& inst, const AnswerRecord& answer) {
    InstanceEval e;
    e.instance_id = inst.id;
    e.answer = answer_metrics(answer.predicted_answer, inst.gold_answer);
    std::vector<Passage> context;
    for (int idx : answer.context_order) {
        const Passage* p = inst.find_passage(idx);
        if (!p) {
            throw Error(ErrorCode::CorruptTrace,
                        "answer for " + inst.id + " cites unknown passage " + std::to_string(idx));
        }
        context.push_back(*p);
    }
    e.k_precision = k_precision(answer.predicted_answer, context);
    e.selected_count = static_cast<int>(std::set<int>(answer.context_order.begin(), answer.context_order.end()).size());
    if (inst.supporting_indices) {
        e.retrieval = retrieval_metrics(answer.context_order, *inst.supporting_indices);
        e.supporting_count = static_cast<int>(inst.supporting_indices->size());
    }
    return e;
}

MetricMeans mean_metrics(std::span<const InstanceEval> rows) {
    MetricMeans m;
    m.count = rows.size();
    for (const auto& r : rows) {
        m.em += r.answer.em;
        m.f1 += r.answer.f1;
        m.precision += r.answer.precision;
        m.recall += r.answer.recall;
        m.k_precision += r.k_precision;
        m.mean_selected += r.selected_count;
        if (r.retrieval) {
            ++m.retrieval_count;
            m.retrieval_precision += r.retrieval->precision;
            m.retrieval_recall += r.retrieval->recall;
            m.retrieval_f1 += r.retrieval->f1;
        }
    }
    if (m.count) {
        const double n = static_cast<double>(m.count);
        m.em /= n;
        m.f1 /= n;
        m.precision /= n;
        m.recall /= n;
        m.k_precision /= n;
        m.mean_selected /= n;
    }
    if (m.retrieval_count) {
        const double n = static_cast<double>(m.retrieval_count);
        m.retrieval_precision /= n;
        m.retrieval_recall /= n;
        m.retrieval_f1 /= n;
    }
    return m;
}

EvalReport aggregate(std::span<const InstanceEval> rows, const std::string& method, const EvalOptions& options) {
    if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to aggregate");
    EvalReport report;
    report.method = method;
    report.instances.assign(rows.begin(), rows.end());
    report.overall = mean_metrics(rows);

    std::map<std::pair<int, int>, std::size_t> hist;
    for (const auto& r : rows) {
        if (r.retrieval && r.supporting_count) ++hist[{*r.supporting_count, r.retrieval->delta_hops}];
    }
    for (const auto& [key, count] : hist) report.delta_hops.push_back({key.first, key.second, count});

    if (!options.subset_sizes.empty()) {
        auto picks = subsample_indices(rows.size(), options.subset_sizes, options.subset_seed);
        for (std::size_t s = 0; s < picks.size(); ++s) {
            std::vector<InstanceEval> subset;
            for (auto i : picks[s]) subset.push_back(rows[i]);
            report.subsets.push_back({options.subset_sizes[s], mean_metrics(subset)});
        }
    }

    std::vector<double> kp, f1;
    for (const auto& r : rows) {
        kp.push_back(r.k_precision);
        f1.push_back(r.answer.f1);
    }
    try {
        report.pearson_k_precision_f1 = pearson(kp, f1);
    } catch (const Error&) {
        report.pearson_k_precision_f1.reset();
    }
    return report;
}

namespace {

nlohmann::json means_json(const MetricMeans& m, double scale) {
    nlohmann::json j{{"instances", m.count},
                     {"em", m.em * scale},
                     {"f1", m.f1 * scale},
                     {"precision", m.precision * scale},
                     {"recall", m.recall * scale},
                     {"k_precision", m.k_precision * scale},
                     {"mean_selected", m.mean_selected}};
    if (m.retrieval_count) {
        j["retrieval"] = {{"instances", m.retrieval_count},
                          {"precision", m.retrieval_precision * scale},
                          {"recall", m.retrieval_recall * scale},
                          {"f1", m.retrieval_f1 * scale}};
    }
    return j;
}

} // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["method"] = report.method;
    j["metrics"] = means_json(report.overall, 100.0);
    j["metrics_raw"] = means_json(report.overall, 1.0);
    auto& hist = j["delta_hops"] = nlohmann::json::array();
    for (const auto& b : report.delta_hops) {
        hist.push_back({{"supporting", b.supporting}, {"delta", b.delta}, {"count", b.count}});
    }
    auto& subsets = j["subsets"] = nlohmann::json::array();
    for (const auto& s : report.subsets) {
        subsets.push_back({{"size", s.size}, {"metrics", means_json(s.metrics, 100.0)},
                           {"metrics_raw", means_json(s.metrics, 1.0)}});
    }
    j["pearson_k_precision_f1"] =
        report.pearson_k_precision_f1 ? nlohmann::json(*report.pearson_k_precision_f1) : nlohmann::json(nullptr);
    return j;
}

namespace {
constexpr const char* kCsvHeader =
    "instance_id,em,f1,precision,recall,k_precision,selected,supporting,retrieval_precision,retrieval_recall,"
    "retrieval_f1,delta_hops";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}
} // namespace

std::string report_to_csv(const EvalReport& report) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : report.instances) {
        std::vector<std::string> f{csv_field(r.instance_id),
                                   format_double(r.answer.em),
                                   format_double(r.answer.f1),
                                   format_double(r.answer.precision),
                                   format_double(r.answer.recall),
                                   format_double(r.k_precision),
                                   std::to_string(r.selected_count),
                                   r.supporting_count ? std::to_string(*r.supporting_count) : std::string()};
        if (r.retrieval) {
            f.push_back(format_double(r.retrieval->precision));
            f.push_back(format_double(r.retrieval->recall));
            f.push_back(format_double(r.retrieval->f1));
            f.push_back(std::to_string(r.retrieval->delta_hops));
        } else {
            f.insert(f.end(), {"", "", "", ""});
        }
        out += join(f, ",");
        out += '\n';
    }
    return out;
}

std::vector<InstanceEval> instances_from_csv(std::string_view csv) {
    std::vector<InstanceEval> rows;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < csv.size()) {
        auto nl = csv.find('\n', pos);
        auto line = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? csv.size() : nl + 1;
        ++lineno;
        if (lineno == 1) {
            if (line != kCsvHeader) throw Error(ErrorCode::CorruptTrace, "report csv: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 12) throw Error(ErrorCode::CorruptTrace, "report csv line " + std::to_string(lineno));
        try {
            InstanceEval e;
            e.instance_id = f[0];
            e.answer = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
            e.k_precision = std::stod(f[5]);
            e.selected_count = std::stoi(f[6]);
            if (!f[7].empty()) e.supporting_count = std::stoi(f[7]);
            if (!f[8].empty()) e.retrieval = RetrievalMetrics{std::stod(f[8]), std::stod(f[9]), std::stod(f[10]),
                                                              std::stoi(f[11])};
            rows.push_back(std::move(e));
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::CorruptTrace, "report csv line " + std::to_string(lineno) + ": bad number");
        }
    }
    return rows;
}

} // namespace gensco
