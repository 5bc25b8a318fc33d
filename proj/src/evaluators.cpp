#include "agentaudit/evaluators.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "agentaudit/errors.hpp"

namespace agentaudit {

std::string to_string(EvaluatorId id) {
    switch (id) {
        case EvaluatorId::OutputSpec: return "output_spec";
        case EvaluatorId::TransitionSpec: return "transition_spec";
        case EvaluatorId::ForbiddenEdges: return "forbidden_edges";
        case EvaluatorId::ArgumentGroundedness: return "argument_groundedness";
        case EvaluatorId::ArgumentSpec: return "argument_spec";
        case EvaluatorId::PredictedPlan: return "predicted_plan";
        case EvaluatorId::PredictedFinalState: return "predicted_final_state";
    }
    return "output_spec";
}

EvaluatorId evaluator_id_from_string(const std::string& text) {
    for (EvaluatorId id : kEvaluatorOrder) {
        if (to_string(id) == text) return id;
    }
    throw AuditError("unknown evaluator id: " + text);
}

namespace {

size_t match_object_end(const std::string& text, size_t start) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

std::string numbered(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (size_t i = 0; i < items.size(); ++i) out << (i + 1) << ". " << items[i] << "\n";
    std::string text = out.str();
    if (!text.empty()) text.pop_back();
    return text;
}

EvaluatorResult skipped(EvaluatorId id, const std::string& note) {
    EvaluatorResult result;
    result.id = id;
    result.included = false;
    result.reasoning = note;
    return result;
}

std::vector<EvalViolation> violations_from_json(const nlohmann::ordered_json& doc) {
    std::vector<EvalViolation> violations;
    if (!doc.is_array()) return violations;
    for (const auto& entry : doc) {
        EvalViolation v;
        if (entry.is_string()) {
            v.description = entry.get<std::string>();
        } else if (entry.is_object()) {
            v.description = entry.value("description", std::string{});
            if (entry.contains("tier") && entry.at("tier").is_number_integer())
                v.tier = entry.at("tier").get<int>();
        }
        if (!v.description.empty()) violations.push_back(std::move(v));
    }
    return violations;
}

struct JudgeOutcome {
    JudgeVerdict verdict;
    std::vector<EvalViolation> violations;
};

JudgeOutcome parse_judge_payload(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        size_t end = match_object_end(text, i);
        if (end == std::string::npos) continue;
        auto doc = json::parse(text.substr(i, end - i), nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) continue;
        if (doc.contains("reasoning") && doc.at("reasoning").is_string() &&
            doc.contains("score") && doc.at("score").is_number()) {
            JudgeOutcome outcome;
            outcome.verdict.reasoning = doc.at("reasoning").get<std::string>();
            outcome.verdict.score = doc.at("score").get<double>();
            if (outcome.verdict.score < 0.0) {
                outcome.verdict.score = 0.0;
                outcome.verdict.clamped = true;
            } else if (outcome.verdict.score > 100.0) {
                outcome.verdict.score = 100.0;
                outcome.verdict.clamped = true;
            }
            if (doc.contains("violations"))
                outcome.violations = violations_from_json(doc.at("violations"));
            return outcome;
        }
        i = end - 1;
    }
    throw JudgeParseFailure("no JSON object with reasoning and numeric score");
}

/// Judge call with one re-ask on parse failure.
JudgeOutcome complete_judged(LlmClient& client, JudgeRequest request) {
    std::string text = client.complete(request).text;
    try {
        return parse_judge_payload(text);
    } catch (const JudgeParseFailure&) {
        request.extra_context += request.extra_context.empty() ? "" : "\n";
        request.extra_context += "Return only JSON.";
        text = client.complete(request).text;
        return parse_judge_payload(text);
    }
}

json tool_calls_json(const NormalizedTrace& trace) {
    json calls = json::array();
    for (const auto& msg : trace.messages) {
        for (const auto& call : msg.tool_calls) {
            calls.push_back({{"id", call.id}, {"name", call.name}, {"arguments", call.arguments}});
        }
    }
    return calls;
}

bool value_matches_type(const json& value, ParamType type) {
    switch (type) {
        case ParamType::String: return value.is_string();
        case ParamType::Number: return value.is_number();
        case ParamType::Integer: return value.is_number_integer();
        case ParamType::Boolean: return value.is_boolean();
        case ParamType::Object: return value.is_object();
        case ParamType::Array: return value.is_array();
    }
    return false;
}

}  // namespace

JudgeVerdict parse_judge_response(const std::string& text) {
    return parse_judge_payload(text).verdict;
}

EvaluatorResult eval_forbidden_edges(const std::vector<std::string>& sequence,
                                     const std::vector<ForbiddenEdge>& edges) {
    EvaluatorResult result;
    result.id = EvaluatorId::ForbiddenEdges;
    if (edges.empty()) {
        result.included = false;
        result.reasoning = "no forbidden edges extracted; nothing to check";
        return result;
    }
    for (size_t i = 0; i + 1 < sequence.size(); ++i) {
        for (const auto& edge : edges) {
            if (sequence[i] == edge.from && sequence[i + 1] == edge.to) {
                result.violations.push_back(
                    {"forbidden transition " + edge.from + " -> " + edge.to +
                         " at position " + std::to_string(i) + ": " + edge.reason,
                     std::nullopt});
            }
        }
    }
    result.score = result.violations.empty() ? 100.0 : 0.0;
    result.reasoning = result.violations.empty()
                           ? "no forbidden transition occurred"
                           : std::to_string(result.violations.size()) +
                                 " forbidden transition(s) occurred";
    return result;
}

std::vector<EvalViolation> validate_arguments_static(const NormalizedTrace& trace,
                                                     const ArgumentSpec& argument_spec) {
    std::vector<EvalViolation> violations;
    for (const auto& msg : trace.messages) {
        for (const auto& call : msg.tool_calls) {
            auto it = argument_spec.per_tool.find(call.name);
            if (it == argument_spec.per_tool.end()) {
                violations.push_back({"unknown tool: " + call.name + " (call " + call.id + ")",
                                      std::nullopt});
                continue;
            }
            const auto& params = it->second;
            const json& args =
                call.arguments.is_object() ? call.arguments : json(json::object());
            for (const auto& param : params) {
                if (!args.contains(param.name)) {
                    if (param.required)
                        violations.push_back({call.name + ": missing required parameter " +
                                                  param.name,
                                              std::nullopt});
                    continue;
                }
                const json& value = args.at(param.name);
                if (!value_matches_type(value, param.type)) {
                    violations.push_back({call.name + ": parameter " + param.name +
                                              " type mismatch, expected " + to_string(param.type) +
                                              ", got " + value.dump(),
                                          std::nullopt});
                    continue;
                }
                if (param.enum_values) {
                    bool found = std::any_of(param.enum_values->begin(), param.enum_values->end(),
                                             [&](const json& v) { return v == value; });
                    if (!found)
                        violations.push_back({call.name + ": parameter " + param.name +
                                                  " value " + value.dump() + " not in enum",
                                              std::nullopt});
                }
                if (value.is_number()) {
                    double number = value.get<double>();
                    if (param.min_value && number < *param.min_value)
                        violations.push_back({call.name + ": parameter " + param.name +
                                                  " below minimum " + json(*param.min_value).dump(),
                                              std::nullopt});
                    if (param.max_value && number > *param.max_value)
                        violations.push_back({call.name + ": parameter " + param.name +
                                                  " above maximum " + json(*param.max_value).dump(),
                                              std::nullopt});
                }
                if (param.pattern && value.is_string()) {
                    std::regex re(*param.pattern);
                    if (!std::regex_match(value.get<std::string>(), re))
                        violations.push_back({call.name + ": parameter " + param.name +
                                                  " does not match pattern " + *param.pattern,
                                              std::nullopt});
                }
            }
            for (const auto& [arg_name, arg_value] : args.items()) {
                bool declared = std::any_of(params.begin(), params.end(),
                                            [&](const ParamSpec& p) { return p.name == arg_name; });
                if (!declared)
                    violations.push_back({call.name + ": undeclared parameter " + arg_name,
                                          std::nullopt});
            }
        }
    }
    return violations;
}

EvaluatorResult judge_with_rubric(EvaluatorId id, const EvaluationState& state, LlmClient& client) {
    const NormalizedTrace& trace = *state.trace;
    const SpecSuite& specs = *state.specs;

    JudgeRequest request;
    std::vector<EvalViolation> static_violations;

    switch (id) {
        case EvaluatorId::OutputSpec: {
            if (!specs.output) return skipped(id, "output specification unavailable");
            if (specs.output->rules.empty()) return skipped(id, "no output rules extracted");
            request.template_id = "output_spec_judge";
            request.variables = {{"specs_text", numbered(specs.output->rules)},
                                 {"conversation_text", render_conversation(trace, true)}};
            break;
        }
        case EvaluatorId::TransitionSpec: {
            if (!specs.transition) return skipped(id, "transition specification unavailable");
            if (specs.transition->rules.empty()) return skipped(id, "no transition rules extracted");
            request.template_id = "transition_spec_judge";
            request.variables = {{"specs_text", numbered(specs.transition->rules)},
                                 {"raw_messages", render_conversation(trace, false)},
                                 {"full_messages", render_conversation(trace, true)}};
            break;
        }
        case EvaluatorId::ArgumentGroundedness: {
            if (tool_calls_json(trace).empty()) return skipped(id, "no tool calls in trace");
            request.template_id = "argument_groundedness_judge";
            request.variables = {{"tool_calls_json", tool_calls_json(trace).dump(2)},
                                 {"conversation_text", render_conversation(trace, true)}};
            break;
        }
        case EvaluatorId::ArgumentSpec: {
            if (!specs.argument || specs.argument->per_tool.empty())
                return skipped(id, "no tool schemas available");
            // Deterministic pre-check feeds the judge as matched-call context.
            static_violations = validate_arguments_static(trace, *specs.argument);
            json matched = json::array();
            for (const auto& msg : trace.messages) {
                for (const auto& call : msg.tool_calls) {
                    json entry = {{"id", call.id},
                                  {"name", call.name},
                                  {"arguments", call.arguments},
                                  {"schema_found", specs.argument->per_tool.contains(call.name)}};
                    json flagged = json::array();
                    for (const auto& v : static_violations) {
                        if (v.description.rfind(call.name + ":", 0) == 0 ||
                            v.description.find("(call " + call.id + ")") != std::string::npos)
                            flagged.push_back(v.description);
                    }
                    entry["static_violations"] = flagged;
                    matched.push_back(entry);
                }
            }
            request.template_id = "argument_spec_judge";
            request.variables = {{"tool_schemas_json", tools_json_text(trace.tools)},
                                 {"matched_calls_json", matched.dump(2)}};
            break;
        }
        case EvaluatorId::PredictedPlan: {
            if (!specs.plan) return skipped(id, "missing predicted plan");
            request.template_id = "predicted_plan_judge";
            request.variables = {{"plan", render_plan_text(*specs.plan)},
                                 {"conversation_text", render_conversation(trace, true)}};
            break;
        }
        case EvaluatorId::PredictedFinalState: {
            if (!specs.final_state) return skipped(id, "missing predicted final state");
            request.template_id = "predicted_final_state_judge";
            request.variables = {{"fini_state", specs.final_state->description},
                                 {"conversation_text", render_conversation(trace, true)}};
            break;
        }
        case EvaluatorId::ForbiddenEdges:
            throw AuditError("forbidden_edges is not a rubric evaluator");
    }

    JudgeOutcome outcome = complete_judged(client, request);

    EvaluatorResult result;
    result.id = id;
    result.score = outcome.verdict.score;
    result.reasoning = outcome.verdict.reasoning;
    result.violations = std::move(static_violations);
    for (auto& v : outcome.violations) result.violations.push_back(std::move(v));
    if (outcome.verdict.clamped) result.warnings.push_back("judge score clamped to [0,100]");
    if (id == EvaluatorId::PredictedFinalState && result.score <= 25.0)
        result.outcome_failure = true;
    return result;
}

EvaluationState run_suite(const NormalizedTrace& trace, const SpecSuite& specs, LlmClient& client) {
    EvaluationState state;
    state.trace = &trace;
    state.specs = &specs;

    for (EvaluatorId id : kEvaluatorOrder) {
        if (id == EvaluatorId::ForbiddenEdges) {
            if (!specs.forbidden_edges) {
                state.results[id] = skipped(id, "forbidden edges unavailable");
            } else {
                state.results[id] =
                    eval_forbidden_edges(tool_call_sequence(trace), *specs.forbidden_edges);
            }
            continue;
        }
        try {
            state.results[id] = judge_with_rubric(id, state, client);
        } catch (const JudgeParseFailure& e) {
            state.results[id] = skipped(id, std::string("judge parse failure: ") + e.what());
        }
    }
    return state;
}

}  // namespace agentaudit
