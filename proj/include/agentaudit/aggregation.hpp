#pragma once

#include <string>
#include <vector>

#include "agentaudit/evaluators.hpp"
#include "agentaudit/spec_extraction.hpp"

namespace agentaudit {

enum class Tier { Critical, Important, Low };

std::string to_string(Tier tier);
Tier tier_from_string(const std::string& text);

int tier_weight(Tier tier);  // critical 3, important 2, low 1

struct TieredResult {
    EvaluatorResult result;
    Tier tier = Tier::Low;
    int weight = 1;
};

/// Static tier map plus dynamic promotion: predicted_final_state joins the
/// critical tier when its outcome_failure flag is set.
std::vector<TieredResult> assign_tiers(const std::vector<EvaluatorResult>& results,
                                       bool* promoted_final_state = nullptr);

struct AggregateOutcome {
    double exact = 0.0;    // before rounding
    double rounded = 0.0;  // two decimals
};

/// Gated minimum: min(min critical score, weighted average) over included
/// evaluators; the weighted average alone when no critical evaluator is
/// included. Throws NoIncludedEvaluatorsError.
AggregateOutcome aggregate_absolute_score(const std::vector<TieredResult>& tiered);

struct TraceReport {
    std::string trace_id;
    std::vector<TieredResult> tiered_results;
    bool promoted_final_state = false;
    bool degraded = false;  // both always-critical evaluators excluded
    double final_score = 0.0;
    SpecSuite specs;
    json meta = json::object();
};

TraceReport build_report(const std::string& trace_id, const std::vector<EvaluatorResult>& results,
                         SpecSuite specs, json meta);

/// Deterministic serialization with stable key order.
json write_trace_artifact(const TraceReport& report);
TraceReport report_from_artifact(const json& doc);

}  // namespace agentaudit
