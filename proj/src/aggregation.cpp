#include "agentaudit/aggregation.hpp"

#include <cmath>
#include <limits>

#include "agentaudit/errors.hpp"

namespace agentaudit {

std::string to_string(Tier tier) {
    switch (tier) {
        case Tier::Critical: return "critical";
        case Tier::Important: return "important";
        case Tier::Low: return "low";
    }
    return "low";
}

Tier tier_from_string(const std::string& text) {
    if (text == "critical") return Tier::Critical;
    if (text == "important") return Tier::Important;
    if (text == "low") return Tier::Low;
    throw AuditError("unknown tier: " + text);
}

int tier_weight(Tier tier) {
    switch (tier) {
        case Tier::Critical: return 3;
        case Tier::Important: return 2;
        case Tier::Low: return 1;
    }
    return 1;
}

namespace {

Tier base_tier(EvaluatorId id) {
    switch (id) {
        case EvaluatorId::PredictedPlan:
        case EvaluatorId::OutputSpec:
            return Tier::Critical;
        case EvaluatorId::TransitionSpec:
        case EvaluatorId::ArgumentSpec:
            return Tier::Important;
        case EvaluatorId::ForbiddenEdges:
        case EvaluatorId::ArgumentGroundedness:
        case EvaluatorId::PredictedFinalState:
            return Tier::Low;
    }
    return Tier::Low;
}

}  // namespace

std::vector<TieredResult> assign_tiers(const std::vector<EvaluatorResult>& results,
                                       bool* promoted_final_state) {
    if (promoted_final_state) *promoted_final_state = false;
    std::vector<TieredResult> tiered;
    tiered.reserve(results.size());
    for (const auto& result : results) {
        Tier tier = base_tier(result.id);
        if (result.id == EvaluatorId::PredictedFinalState && result.outcome_failure) {
            tier = Tier::Critical;
            if (promoted_final_state) *promoted_final_state = true;
        }
        tiered.push_back({result, tier, tier_weight(tier)});
    }
    return tiered;
}

AggregateOutcome aggregate_absolute_score(const std::vector<TieredResult>& tiered) {
    double weighted_sum = 0.0;
    double weight_total = 0.0;
    double critical_min = std::numeric_limits<double>::infinity();
    bool any_included = false;
    bool any_critical = false;

    for (const auto& entry : tiered) {
        if (!entry.result.included) continue;
        any_included = true;
        weighted_sum += entry.weight * entry.result.score;
        weight_total += entry.weight;
        if (entry.tier == Tier::Critical) {
            any_critical = true;
            critical_min = std::min(critical_min, entry.result.score);
        }
    }
    if (!any_included) throw NoIncludedEvaluatorsError("no included evaluators to aggregate");

    double average = weighted_sum / weight_total;
    double exact = any_critical ? std::min(critical_min, average) : average;
    return {exact, std::round(exact * 100.0) / 100.0};
}

TraceReport build_report(const std::string& trace_id, const std::vector<EvaluatorResult>& results,
                         SpecSuite specs, json meta) {
    TraceReport report;
    report.trace_id = trace_id;
    report.tiered_results = assign_tiers(results, &report.promoted_final_state);
    report.specs = std::move(specs);
    report.meta = std::move(meta);

    bool plan_included = false;
    bool output_included = false;
    for (const auto& entry : report.tiered_results) {
        if (entry.result.id == EvaluatorId::PredictedPlan && entry.result.included)
            plan_included = true;
        if (entry.result.id == EvaluatorId::OutputSpec && entry.result.included)
            output_included = true;
    }
    report.degraded = !plan_included && !output_included;
    report.final_score = aggregate_absolute_score(report.tiered_results).rounded;
    return report;
}

json write_trace_artifact(const TraceReport& report) {
    json doc;
    doc["trace_id"] = report.trace_id;
    doc["final_score"] = report.final_score;
    doc["promoted_final_state"] = report.promoted_final_state;
    doc["degraded"] = report.degraded;
    doc["evaluators"] = json::array();
    for (const auto& entry : report.tiered_results) {
        json e;
        e["id"] = to_string(entry.result.id);
        e["score"] = entry.result.score;
        e["tier"] = to_string(entry.tier);
        e["weight"] = entry.weight;
        e["included"] = entry.result.included;
        e["reasoning"] = entry.result.reasoning;
        e["violations"] = json::array();
        for (const auto& v : entry.result.violations) {
            json violation;
            violation["description"] = v.description;
            if (v.tier) violation["tier"] = *v.tier;
            e["violations"].push_back(violation);
        }
        if (entry.result.id == EvaluatorId::PredictedFinalState)
            e["outcome_failure"] = entry.result.outcome_failure;
        if (!entry.result.warnings.empty()) e["warnings"] = entry.result.warnings;
        doc["evaluators"].push_back(e);
    }
    doc["specs"] = report.specs.to_json();
    doc["meta"] = report.meta;
    return doc;
}

TraceReport report_from_artifact(const json& doc) {
    TraceReport report;
    report.trace_id = doc.at("trace_id").get<std::string>();
    report.final_score = doc.at("final_score").get<double>();
    report.promoted_final_state = doc.at("promoted_final_state").get<bool>();
    report.degraded = doc.at("degraded").get<bool>();
    for (const auto& e : doc.at("evaluators")) {
        TieredResult entry;
        entry.result.id = evaluator_id_from_string(e.at("id").get<std::string>());
        entry.result.score = e.at("score").get<double>();
        entry.tier = tier_from_string(e.at("tier").get<std::string>());
        entry.weight = e.at("weight").get<int>();
        entry.result.included = e.at("included").get<bool>();
        entry.result.reasoning = e.at("reasoning").get<std::string>();
        for (const auto& v : e.at("violations")) {
            EvalViolation violation;
            violation.description = v.at("description").get<std::string>();
            if (v.contains("tier")) violation.tier = v.at("tier").get<int>();
            entry.result.violations.push_back(std::move(violation));
        }
        if (e.contains("outcome_failure"))
            entry.result.outcome_failure = e.at("outcome_failure").get<bool>();
        if (e.contains("warnings")) {
            for (const auto& w : e.at("warnings"))
                entry.result.warnings.push_back(w.get<std::string>());
        }
        report.tiered_results.push_back(std::move(entry));
    }
    report.specs = SpecSuite::from_json(doc.at("specs"));
    report.meta = doc.value("meta", json::object());
    return report;
}

}  // namespace agentaudit
