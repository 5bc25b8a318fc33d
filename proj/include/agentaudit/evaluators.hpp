#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentaudit/llm_client.hpp"
#include "agentaudit/spec_extraction.hpp"
#include "agentaudit/trace.hpp"

namespace agentaudit {

enum class EvaluatorId {
    OutputSpec,
    TransitionSpec,
    ForbiddenEdges,
    ArgumentGroundedness,
    ArgumentSpec,
    PredictedPlan,
    PredictedFinalState,
};

/// Fixed execution order of the suite.
inline constexpr std::array<EvaluatorId, 7> kEvaluatorOrder = {
    EvaluatorId::OutputSpec,         EvaluatorId::TransitionSpec,
    EvaluatorId::ForbiddenEdges,     EvaluatorId::ArgumentGroundedness,
    EvaluatorId::ArgumentSpec,       EvaluatorId::PredictedPlan,
    EvaluatorId::PredictedFinalState,
};

std::string to_string(EvaluatorId id);
EvaluatorId evaluator_id_from_string(const std::string& text);

struct EvalViolation {
    std::string description;
    std::optional<int> tier;  // 1..3 when the judge assigned one

    bool operator==(const EvalViolation&) const = default;
};

struct EvaluatorResult {
    EvaluatorId id = EvaluatorId::OutputSpec;
    double score = 0.0;  // always in [0,100]
    std::string reasoning;
    std::vector<EvalViolation> violations;
    bool included = true;
    bool outcome_failure = false;  // predicted_final_state only
    std::vector<std::string> warnings;
};

struct EvaluationState {
    const NormalizedTrace* trace = nullptr;
    const SpecSuite* specs = nullptr;
    std::map<EvaluatorId, EvaluatorResult> results;
};

struct JudgeVerdict {
    std::string reasoning;
    double score = 0.0;
    bool clamped = false;
};

/// Extracts the first JSON object with string `reasoning` and numeric `score`
/// from a judge completion; scores outside [0,100] are clamped with a flag.
/// Throws JudgeParseFailure.
JudgeVerdict parse_judge_response(const std::string& text);

/// Deterministic consecutive-pair scan. Score 0 if any adjacent pair matches
/// an edge, 100 otherwise; included only when the edge list is non-empty.
EvaluatorResult eval_forbidden_edges(const std::vector<std::string>& sequence,
                                     const std::vector<ForbiddenEdge>& edges);

/// Schema conformance pre-check over every tool call: missing required
/// parameters, type/enum/bounds/pattern mismatches, undeclared extras, and
/// calls to tools without schemas.
std::vector<EvalViolation> validate_arguments_static(const NormalizedTrace& trace,
                                                     const ArgumentSpec& argument_spec);

/// One rubric-judged evaluator. Missing dependencies yield included = false
/// with a skip note instead of an error.
EvaluatorResult judge_with_rubric(EvaluatorId id, const EvaluationState& state, LlmClient& client);

/// Runs all seven evaluators sequentially in kEvaluatorOrder. Individual
/// judge parse failures yield included = false; BackendUnavailable propagates.
EvaluationState run_suite(const NormalizedTrace& trace, const SpecSuite& specs, LlmClient& client);

}  // namespace agentaudit
