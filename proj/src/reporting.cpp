#include "agentaudit/reporting.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "agentaudit/errors.hpp"
#include "agentaudit/evaluators.hpp"
#include "agentaudit/spec_extraction.hpp"

namespace agentaudit {

namespace fs = std::filesystem;

namespace {

json load_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AuditError("cannot open " + path.string());
    return json::parse(in);
}

std::map<std::string, double> load_rewards(const fs::path& path) {
    std::map<std::string, double> rewards;
    if (path.empty()) return rewards;
    json doc = load_json_file(path);
    for (const auto& [trace_id, value] : doc.items()) rewards[trace_id] = value.get<double>();
    return rewards;
}

TraceReport evaluate_one(const NormalizedTrace& trace, LlmClient& client) {
    SpecSuite specs = extract_spec_suite(trace, client);
    EvaluationState state = run_suite(trace, specs, client);

    std::vector<EvaluatorResult> results;
    for (EvaluatorId id : kEvaluatorOrder) results.push_back(state.results.at(id));

    json meta;
    meta["model"] = client.default_model();
    meta["backend"] = client.backend_name();
    if (trace.metadata.domain) meta["domain"] = *trace.metadata.domain;
    if (trace.metadata.source_format) meta["source_format"] = *trace.metadata.source_format;
    if (trace.metadata.outcome_reward) meta["outcome_reward"] = *trace.metadata.outcome_reward;
    return build_report(trace.trace_id, results, std::move(specs), std::move(meta));
}

void write_artifact_file(const fs::path& out_dir, const TraceReport& report) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / (report.trace_id + ".audit.json"), std::ios::binary);
    out << write_trace_artifact(report).dump(2) << "\n";
}

}  // namespace

BatchResult run_batch(const fs::path& input_path, const BatchConfig& config, LlmClient& client) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(input_path)) {
        files.push_back(input_path);
    } else if (fs::is_directory(input_path)) {
        for (const auto& entry : fs::directory_iterator(input_path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw EmptyInputError("no trace files under " + input_path.string());

    const auto rewards = load_rewards(config.rewards_file);
    ImporterRegistry registry = ImporterRegistry::with_default_adapters();

    BatchResult batch;
    std::vector<NormalizedTrace> traces;
    for (const auto& file : files) {
        try {
            json raw = load_json_file(file);
            auto imported = config.format.empty()
                                ? registry.import_auto(raw, file.stem().string())
                                : registry.import_trace(raw, config.format, file.stem().string());
            for (auto& trace : imported) {
                auto it = rewards.find(trace.trace_id);
                if (it != rewards.end()) trace.metadata.outcome_reward = it->second;
                traces.push_back(std::move(trace));
            }
        } catch (const std::exception& e) {
            batch.failures.push_back({file.string(), e.what()});
        }
    }
    if (traces.empty() && batch.failures.empty())
        throw EmptyInputError("no importable traces under " + input_path.string());

    std::mutex mutex;
    std::atomic<size_t> next{0};
    std::exception_ptr fatal;
    const int width = std::max(1, config.parallelism);

    auto worker = [&] {
        for (;;) {
            size_t index = next.fetch_add(1);
            if (index >= traces.size()) return;
            try {
                TraceReport report = evaluate_one(traces[index], client);
                if (config.write_artifacts) write_artifact_file(config.out_dir, report);
                std::lock_guard lock(mutex);
                batch.reports.push_back(std::move(report));
            } catch (const BackendUnavailableError&) {
                std::lock_guard lock(mutex);
                if (!fatal) fatal = std::current_exception();
                return;
            } catch (const std::exception& e) {
                std::lock_guard lock(mutex);
                batch.failures.push_back({traces[index].trace_id, e.what()});
            }
        }
    };

    if (width == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < width; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    std::sort(batch.reports.begin(), batch.reports.end(),
              [](const TraceReport& a, const TraceReport& b) { return a.trace_id < b.trace_id; });
    return batch;
}

std::vector<BatchSummary> summarize(const std::vector<TraceReport>& reports,
                                    const std::string& group_by, double threshold) {
    auto group_of = [&](const TraceReport& report) -> std::string {
        if (group_by == "domain") return report.meta.value("domain", "(unknown)");
        if (group_by == "model") return report.meta.value("model", "(unknown)");
        return "all";
    };

    std::map<std::string, std::vector<const TraceReport*>> groups;
    for (const auto& report : reports) groups[group_of(report)].push_back(&report);

    std::vector<BatchSummary> summaries;
    for (const auto& [key, members] : groups) {
        BatchSummary summary;
        summary.group_key = key;
        summary.trace_count = static_cast<int>(members.size());

        std::map<std::string, std::pair<double, int>> sums;  // metric -> (sum, count)
        double final_sum = 0.0;
        for (const TraceReport* report : members) {
            final_sum += report->final_score;
            bool flagged = report->final_score < threshold;
            for (const auto& entry : report->tiered_results) {
                if (!entry.result.included) continue;
                auto& [sum, count] = sums[to_string(entry.result.id)];
                sum += entry.result.score;
                ++count;
                if (entry.result.score < threshold) flagged = true;
            }
            if (flagged) ++summary.flagged_count;
        }
        summary.aggregate_mean = final_sum / members.size();
        for (const auto& [metric, pair] : sums)
            summary.per_metric_means[metric] = pair.first / pair.second;
        summaries.push_back(std::move(summary));
    }
    return summaries;
}

ClassificationAnalysis threshold_analysis(const std::vector<TraceReport>& reports,
                                          const std::string& metric, double threshold) {
    struct Sample {
        double score;
        bool failed;
    };
    std::vector<Sample> samples;
    for (const auto& report : reports) {
        if (!report.meta.contains("outcome_reward")) continue;
        double reward = report.meta.at("outcome_reward").get<double>();
        double score = 0.0;
        if (metric == "final") {
            score = report.final_score;
        } else {
            EvaluatorId id = evaluator_id_from_string(metric);
            bool found = false;
            for (const auto& entry : report.tiered_results) {
                if (entry.result.id == id && entry.result.included) {
                    score = entry.result.score;
                    found = true;
                }
            }
            if (!found) continue;
        }
        samples.push_back({score, reward < 1.0});
    }
    if (samples.empty()) throw NoRewardDataError("no reports carry an outcome reward");

    ClassificationAnalysis analysis;
    analysis.threshold = threshold;

    int failures = 0;
    for (const auto& s : samples) {
        bool flagged = s.score < threshold;
        if (s.failed) {
            ++failures;
            flagged ? ++analysis.true_positive : ++analysis.false_negative;
        } else {
            flagged ? ++analysis.false_positive : ++analysis.true_negative;
        }
    }
    int passes = static_cast<int>(samples.size()) - failures;
    analysis.recall_of_failures =
        failures > 0 ? static_cast<double>(analysis.true_positive) / failures : 0.0;

    // ROC-AUC as the rank statistic P(score_failed < score_passed), ties 0.5.
    if (failures > 0 && passes > 0) {
        double wins = 0.0;
        for (const auto& f : samples) {
            if (!f.failed) continue;
            for (const auto& p : samples) {
                if (p.failed) continue;
                if (f.score < p.score) wins += 1.0;
                else if (f.score == p.score) wins += 0.5;
            }
        }
        analysis.roc_auc = wins / (static_cast<double>(failures) * passes);
        analysis.auc_defined = true;
    }

    // PR sweep over all distinct score thresholds (flag when score < t).
    std::set<double> cutoffs;
    for (const auto& s : samples) cutoffs.insert(s.score);
    double top = *cutoffs.rbegin();
    cutoffs.insert(top + 1.0);
    for (double t : cutoffs) {
        int tp = 0, fp = 0;
        for (const auto& s : samples) {
            if (s.score < t) (s.failed ? tp : fp)++;
        }
        if (tp + fp == 0 || failures == 0) continue;
        analysis.pr_points.emplace_back(static_cast<double>(tp) / failures,
                                        static_cast<double>(tp) / (tp + fp));
    }
    return analysis;
}

json summaries_to_json(const std::vector<BatchSummary>& summaries) {
    json doc = json::array();
    for (const auto& s : summaries) {
        json entry;
        entry["group"] = s.group_key;
        entry["trace_count"] = s.trace_count;
        entry["aggregate_mean"] = s.aggregate_mean;
        entry["per_metric_means"] = s.per_metric_means;
        entry["flagged_count"] = s.flagged_count;
        doc.push_back(entry);
    }
    return doc;
}

std::string summaries_to_csv(const std::vector<BatchSummary>& summaries) {
    std::ostringstream out;
    out << "group,trace_count,aggregate_mean";
    for (EvaluatorId id : kEvaluatorOrder) out << "," << to_string(id);
    out << ",flagged_count\n";
    for (const auto& s : summaries) {
        out << s.group_key << "," << s.trace_count << "," << s.aggregate_mean;
        for (EvaluatorId id : kEvaluatorOrder) {
            auto it = s.per_metric_means.find(to_string(id));
            out << ",";
            if (it != s.per_metric_means.end()) out << it->second;
        }
        out << "," << s.flagged_count << "\n";
    }
    return out.str();
}

json analysis_to_json(const ClassificationAnalysis& analysis) {
    json doc;
    doc["threshold"] = analysis.threshold;
    doc["true_positive"] = analysis.true_positive;
    doc["false_positive"] = analysis.false_positive;
    doc["true_negative"] = analysis.true_negative;
    doc["false_negative"] = analysis.false_negative;
    doc["recall_of_failures"] = analysis.recall_of_failures;
    if (analysis.auc_defined) doc["roc_auc"] = analysis.roc_auc;
    else doc["roc_auc"] = "undefined";
    json points = json::array();
    for (const auto& [recall, precision] : analysis.pr_points)
        points.push_back({{"recall", recall}, {"precision", precision}});
    doc["pr_points"] = points;
    return doc;
}

}  // namespace agentaudit
