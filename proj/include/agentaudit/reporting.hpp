#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agentaudit/aggregation.hpp"
#include "agentaudit/importers.hpp"
#include "agentaudit/llm_client.hpp"

namespace agentaudit {

struct BatchConfig {
    std::filesystem::path out_dir;
    std::string format;  // empty = autodetect
    int parallelism = 1;
    std::filesystem::path rewards_file;  // optional sidecar trace_id -> reward
    bool write_artifacts = true;
};

struct BatchFailure {
    std::string source;
    std::string error;
};

struct BatchResult {
    std::vector<TraceReport> reports;  // sorted by trace_id
    std::vector<BatchFailure> failures;
};

/// Imports, extracts, evaluates, and aggregates every trace under input_path
/// (a file or directory of *.json). Per-trace failures are recorded, not
/// fatal. Artifacts are written as <out_dir>/<trace_id>.audit.json.
/// Throws EmptyInputError when nothing importable is found.
BatchResult run_batch(const std::filesystem::path& input_path, const BatchConfig& config,
                      LlmClient& client);

struct BatchSummary {
    std::string group_key;
    std::map<std::string, double> per_metric_means;  // over included results only
    double aggregate_mean = 0.0;
    int trace_count = 0;
    int flagged_count = 0;  // final or any included metric below threshold
};

std::vector<BatchSummary> summarize(const std::vector<TraceReport>& reports,
                                    const std::string& group_by, double threshold = 65.0);

struct ClassificationAnalysis {
    double threshold = 65.0;
    int true_positive = 0;
    int false_positive = 0;
    int true_negative = 0;
    int false_negative = 0;
    double recall_of_failures = 0.0;
    double roc_auc = 0.0;
    bool auc_defined = false;  // false when one class is empty
    std::vector<std::pair<double, double>> pr_points;  // (recall, precision)
};

/// Treats outcome_reward < 1.0 as failure; a trace is flagged when the metric
/// score is strictly below the threshold. ROC-AUC by rank statistics with
/// ties counting 0.5. Throws NoRewardDataError when no report carries a
/// reward.
ClassificationAnalysis threshold_analysis(const std::vector<TraceReport>& reports,
                                          const std::string& metric, double threshold = 65.0);

json summaries_to_json(const std::vector<BatchSummary>& summaries);
std::string summaries_to_csv(const std::vector<BatchSummary>& summaries);
json analysis_to_json(const ClassificationAnalysis& analysis);

}  // namespace agentaudit
