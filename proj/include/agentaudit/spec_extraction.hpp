#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentaudit/llm_client.hpp"
#include "agentaudit/trace.hpp"

namespace agentaudit {

struct RuleList {
    std::string category;  // "output" or "transition"
    std::vector<std::string> rules;

    bool operator==(const RuleList&) const = default;
};

struct ForbiddenEdge {
    std::string from;
    std::string to;
    std::string reason;

    bool operator==(const ForbiddenEdge&) const = default;
};

struct ArgumentSpec {
    std::map<std::string, std::vector<ParamSpec>> per_tool;
    std::vector<std::string> policy_notes;

    bool operator==(const ArgumentSpec&) const = default;
};

struct PlanStep {
    std::string tool;
    std::string expectation;

    bool operator==(const PlanStep&) const = default;
};

struct PredictedPlan {
    std::vector<PlanStep> steps;

    bool operator==(const PredictedPlan&) const = default;
};

struct PredictedFinalState {
    std::string description;

    bool operator==(const PredictedFinalState&) const = default;
};

/// The six extracted specification categories for one trace. A category is
/// absent either because its preconditions were unmet or because extraction
/// failed; failures carry a note in category_errors.
struct SpecSuite {
    std::optional<RuleList> output;
    std::optional<RuleList> transition;
    std::optional<std::vector<ForbiddenEdge>> forbidden_edges;
    std::optional<ArgumentSpec> argument;
    std::optional<PredictedPlan> plan;
    std::optional<PredictedFinalState> final_state;
    std::map<std::string, std::string> category_errors;
    std::vector<std::string> warnings;

    json to_json() const;
    static SpecSuite from_json(const json& doc);
};

enum class PayloadShape { StringArray, EdgeArray, PlanLines, FreeText };

/// Strips code fences and surrounding prose, then locates the first JSON
/// value of the expected shape (or splits lines for PlanLines / passes text
/// through for FreeText). Throws ShapeMismatchError.
json parse_extraction_payload(const std::string& text, PayloadShape shape);

RuleList extract_policy_rules(const NormalizedTrace& trace, const std::string& category,
                              LlmClient& client);
std::vector<ForbiddenEdge> extract_forbidden_edges(const NormalizedTrace& trace, LlmClient& client,
                                                   std::vector<std::string>* warnings = nullptr);
ArgumentSpec derive_argument_spec(const std::vector<ToolSchema>& tools,
                                  const std::string& system_prompt);
PredictedPlan extract_predicted_plan(const NormalizedTrace& trace, LlmClient& client);
PredictedFinalState extract_predicted_final_state(const NormalizedTrace& trace,
                                                  const PredictedPlan& plan, LlmClient& client,
                                                  std::vector<std::string>* warnings = nullptr);

/// Runs every category; per-category failures are recorded, not propagated.
SpecSuite extract_spec_suite(const NormalizedTrace& trace, LlmClient& client);

/// Shared deterministic renderings used in extraction and judge prompts.
std::string render_tools_text(const std::vector<ToolSchema>& tools);
std::string tools_json_text(const std::vector<ToolSchema>& tools);
std::string render_plan_text(const PredictedPlan& plan);

}  // namespace agentaudit
