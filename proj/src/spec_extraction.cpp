#include "agentaudit/spec_extraction.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "agentaudit/errors.hpp"

namespace agentaudit {

namespace {

std::string trim(const std::string& text) {
    size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

/// Content of the first ``` fence if any, otherwise the whole text.
std::string strip_fences(const std::string& text) {
    size_t open = text.find("```");
    if (open == std::string::npos) return text;
    size_t body = text.find('\n', open);
    if (body == std::string::npos) return text;
    ++body;
    size_t close = text.find("```", body);
    if (close == std::string::npos) return text.substr(body);
    return text.substr(body, close - body);
}

/// Finds the end index (exclusive) of a balanced JSON bracket pair starting
/// at `start`, respecting strings and escapes. Returns npos when unbalanced.
size_t match_bracket(const std::string& text, size_t start) {
    char open = text[start];
    char close = open == '[' ? ']' : '}';
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

bool conforms(const json& value, PayloadShape shape) {
    switch (shape) {
        case PayloadShape::StringArray:
            return value.is_array() &&
                   std::all_of(value.begin(), value.end(),
                               [](const json& v) { return v.is_string(); });
        case PayloadShape::EdgeArray:
            return value.is_array() &&
                   std::all_of(value.begin(), value.end(), [](const json& v) {
                       return v.is_object() && v.contains("from") && v.at("from").is_string() &&
                              v.contains("to") && v.at("to").is_string();
                   });
        default:
            return false;
    }
}

json first_json_of_shape(const std::string& text, PayloadShape shape) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '[' && text[i] != '{') continue;
        size_t end = match_bracket(text, i);
        if (end == std::string::npos) continue;
        json value = json::parse(text.substr(i, end - i), nullptr, false);
        if (value.is_discarded()) continue;
        if (conforms(value, shape)) return value;
        i = end - 1;
    }
    throw ShapeMismatchError("no JSON value of the expected shape in payload");
}

constexpr const char* kJsonReminder = "Return only JSON.";
constexpr const char* kPlanReminder = "Return only tool-call lines, one per line.";

/// One automatic re-ask with a terse reminder on parse failure.
json complete_and_parse(LlmClient& client, JudgeRequest request, PayloadShape shape) {
    std::string text = client.complete(request).text;
    try {
        return parse_extraction_payload(text, shape);
    } catch (const ShapeMismatchError&) {
        request.extra_context += request.extra_context.empty() ? "" : "\n";
        request.extra_context += shape == PayloadShape::PlanLines ? kPlanReminder : kJsonReminder;
        text = client.complete(request).text;
        try {
            return parse_extraction_payload(text, shape);
        } catch (const ShapeMismatchError& e) {
            throw ExtractionParseFailure(std::string("extraction payload unusable after re-ask: ") +
                                         e.what());
        }
    }
}

std::string param_summary(const ParamSpec& param) {
    std::string out = param.name + " (" + to_string(param.type) +
                      (param.required ? ", required" : ", optional") + ")";
    if (param.enum_values) {
        out += " enum[";
        for (size_t i = 0; i < param.enum_values->size(); ++i) {
            if (i) out += ", ";
            out += (*param.enum_values)[i].dump();
        }
        out += "]";
    }
    if (param.min_value) out += " min=" + json(*param.min_value).dump();
    if (param.max_value) out += " max=" + json(*param.max_value).dump();
    if (param.pattern) out += " pattern=" + *param.pattern;
    return out;
}

}  // namespace

std::string render_tools_text(const std::vector<ToolSchema>& tools) {
    if (tools.empty()) return "(none)";
    std::ostringstream out;
    for (const auto& tool : tools) {
        out << "- " << tool.name << ": " << tool.description << "\n";
        for (const auto& param : tool.parameters) {
            out << "    " << param_summary(param) << "\n";
        }
    }
    std::string text = out.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

std::string tools_json_text(const std::vector<ToolSchema>& tools) {
    json doc = json::array();
    for (const auto& tool : tools) doc.push_back(tool_schema_to_json(tool));
    return doc.dump(2);
}

std::string render_plan_text(const PredictedPlan& plan) {
    std::ostringstream out;
    for (size_t i = 0; i < plan.steps.size(); ++i) {
        out << (i + 1) << ". " << plan.steps[i].tool;
        if (!plan.steps[i].expectation.empty()) out << ": " << plan.steps[i].expectation;
        out << "\n";
    }
    std::string text = out.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

json parse_extraction_payload(const std::string& text, PayloadShape shape) {
    const std::string body = strip_fences(text);
    switch (shape) {
        case PayloadShape::StringArray:
        case PayloadShape::EdgeArray:
            return first_json_of_shape(body, shape);
        case PayloadShape::PlanLines: {
            json lines = json::array();
            std::istringstream in(body);
            std::string line;
            while (std::getline(in, line)) {
                std::string trimmed = trim(line);
                if (!trimmed.empty()) lines.push_back(trimmed);
            }
            return lines;
        }
        case PayloadShape::FreeText:
            return json(trim(body));
    }
    throw ShapeMismatchError("unknown payload shape");
}

RuleList extract_policy_rules(const NormalizedTrace& trace, const std::string& category,
                              LlmClient& client) {
    JudgeRequest request;
    if (category == "output") {
        request.template_id = "output_spec_extraction";
        std::string tools_section;
        if (!trace.tools.empty())
            tools_section = "\nAvailable Tools:\n" + render_tools_text(trace.tools);
        request.variables = {{"system_prompt", trace.system_prompt},
                             {"tools_section", tools_section}};
    } else if (category == "transition") {
        request.template_id = "transition_spec_extraction";
        std::string combined = trace.system_prompt;
        if (!trace.tools.empty())
            combined += "\n\nAvailable Tools:\n" + render_tools_text(trace.tools);
        request.variables = {{"system_prompt_with_tools", combined}};
    } else {
        throw AuditError("unknown policy category: " + category);
    }

    json payload = complete_and_parse(client, request, PayloadShape::StringArray);
    RuleList rules;
    rules.category = category;
    for (const auto& entry : payload) {
        std::string rule = trim(entry.get<std::string>());
        if (!rule.empty()) rules.rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<ForbiddenEdge> extract_forbidden_edges(const NormalizedTrace& trace, LlmClient& client,
                                                   std::vector<std::string>* warnings) {
    JudgeRequest request;
    request.template_id = "forbidden_edges_extraction";
    request.variables = {{"system_prompt", trace.system_prompt},
                         {"tools_context", render_tools_text(trace.tools)}};

    json payload = complete_and_parse(client, request, PayloadShape::EdgeArray);

    std::set<std::string> known;
    for (const auto& tool : trace.tools) known.insert(tool.name);

    std::vector<ForbiddenEdge> edges;
    for (const auto& entry : payload) {
        ForbiddenEdge edge;
        edge.from = entry.at("from").get<std::string>();
        edge.to = entry.at("to").get<std::string>();
        edge.reason = entry.value("reason", std::string{});
        if (edge.from.empty() || edge.to.empty()) continue;
        if (!known.contains(edge.from) || !known.contains(edge.to)) {
            if (warnings)
                warnings->push_back("dropped forbidden edge " + edge.from + " -> " + edge.to +
                                    ": tool not in trace tool set");
            continue;
        }
        edges.push_back(std::move(edge));
    }
    return edges;
}

ArgumentSpec derive_argument_spec(const std::vector<ToolSchema>& tools,
                                  const std::string& system_prompt) {
    ArgumentSpec spec;
    std::vector<std::string> param_names;
    for (const auto& tool : tools) {
        spec.per_tool[tool.name] = tool.parameters;
        for (const auto& param : tool.parameters) {
            if (std::find(param_names.begin(), param_names.end(), param.name) == param_names.end())
                param_names.push_back(param.name);
        }
    }
    // Sentences of the system prompt that mention a parameter name verbatim.
    std::string sentence;
    auto flush = [&] {
        std::string trimmed = trim(sentence);
        sentence.clear();
        if (trimmed.empty()) return;
        for (const auto& name : param_names) {
            if (trimmed.find(name) != std::string::npos) {
                spec.policy_notes.push_back(trimmed);
                return;
            }
        }
    };
    for (char c : system_prompt) {
        if (c == '.' || c == '!' || c == '?' || c == '\n') flush();
        else sentence += c;
    }
    flush();
    return spec;
}

PredictedPlan extract_predicted_plan(const NormalizedTrace& trace, LlmClient& client) {
    if (!trace.metadata.task_description)
        throw MissingTaskDescriptionError("trace has no task description");

    std::set<std::string> known;
    for (const auto& tool : trace.tools) known.insert(tool.name);

    JudgeRequest request;
    request.template_id = "predicted_plan_extraction";
    request.variables = {{"system_prompt", trace.system_prompt},
                         {"available_tools", render_tools_text(trace.tools)}};
    request.extra_context = "User Intent:\n" + *trace.metadata.task_description;

    auto parse_steps = [&](const json& lines, PredictedPlan* plan) -> bool {
        plan->steps.clear();
        for (const auto& entry : lines) {
            std::string line = entry.get<std::string>();
            // Strip list markers: digits, dots, parens, dashes, bullets.
            size_t pos = 0;
            while (pos < line.size() &&
                   (std::isdigit(static_cast<unsigned char>(line[pos])) || line[pos] == '.' ||
                    line[pos] == ')' || line[pos] == '-' || line[pos] == '*' || line[pos] == ' '))
                ++pos;
            size_t start = pos;
            while (pos < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '_'))
                ++pos;
            std::string token = line.substr(start, pos - start);
            if (token.empty()) continue;
            std::string rest = trim(line.substr(pos));
            while (!rest.empty() && (rest.front() == ':' || rest.front() == '-')) rest = trim(rest.substr(1));
            if (known.contains(token)) {
                plan->steps.push_back({token, rest});
            } else if (pos < line.size() && line[pos] == '(') {
                return false;  // call-shaped line naming an unknown tool
            }
            // plain prose lines are commentary; skipped
        }
        return !plan->steps.empty();
    };

    json lines = complete_and_parse(client, request, PayloadShape::PlanLines);
    PredictedPlan plan;
    if (parse_steps(lines, &plan)) return plan;

    request.extra_context += std::string("\n") + "Return only tool-call lines, one per line, using only the available tools.";
    lines = complete_and_parse(client, request, PayloadShape::PlanLines);
    if (parse_steps(lines, &plan)) return plan;
    throw ExtractionParseFailure("predicted plan references unknown tools or contains no steps");
}

PredictedFinalState extract_predicted_final_state(const NormalizedTrace& trace,
                                                  const PredictedPlan& plan, LlmClient& client,
                                                  std::vector<std::string>* warnings) {
    if (!trace.metadata.init_state) throw MissingInitStateError("trace has no init_state");

    JudgeRequest request;
    request.template_id = "predicted_final_state_extraction";
    request.variables = {{"system_prompt", trace.system_prompt},
                         {"tools_info", render_tools_text(trace.tools)}};
    std::ostringstream ctx;
    ctx << "Initial State:\n" << trace.metadata.init_state->dump(2) << "\n\n";
    ctx << "User Request:\n" << trace.metadata.task_description.value_or("(not provided)") << "\n\n";
    ctx << "Conversation History:\n" << render_conversation(trace, true) << "\n\n";
    ctx << "Plan:\n" << render_plan_text(plan);
    request.extra_context = ctx.str();

    json payload = complete_and_parse(client, request, PayloadShape::FreeText);
    std::string description = payload.get<std::string>();
    if (description.empty()) throw ExtractionParseFailure("empty final state description");

    // Length policy: keep at most 4 lines.
    std::vector<std::string> lines;
    std::istringstream in(description);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.size() > 4) {
        if (warnings)
            warnings->push_back("predicted final state truncated from " +
                                std::to_string(lines.size()) + " to 4 lines");
        description = lines[0] + "\n" + lines[1] + "\n" + lines[2] + "\n" + lines[3];
    }
    return {description};
}

SpecSuite extract_spec_suite(const NormalizedTrace& trace, LlmClient& client) {
    SpecSuite suite;

    try {
        suite.output = extract_policy_rules(trace, "output", client);
    } catch (const AuditError& e) {
        suite.category_errors["output"] = e.what();
    }
    try {
        suite.transition = extract_policy_rules(trace, "transition", client);
    } catch (const AuditError& e) {
        suite.category_errors["transition"] = e.what();
    }
    try {
        suite.forbidden_edges = extract_forbidden_edges(trace, client, &suite.warnings);
    } catch (const AuditError& e) {
        suite.category_errors["forbidden_edges"] = e.what();
    }
    suite.argument = derive_argument_spec(trace.tools, trace.system_prompt);

    if (trace.metadata.task_description) {
        try {
            suite.plan = extract_predicted_plan(trace, client);
        } catch (const AuditError& e) {
            suite.category_errors["plan"] = e.what();
        }
    }
    if (trace.metadata.init_state) {
        if (suite.plan) {
            try {
                suite.final_state =
                    extract_predicted_final_state(trace, *suite.plan, client, &suite.warnings);
            } catch (const AuditError& e) {
                suite.category_errors["final_state"] = e.what();
            }
        } else {
            suite.category_errors["final_state"] = "predicted plan unavailable";
        }
    }
    return suite;
}

json SpecSuite::to_json() const {
    json doc;
    if (output) {
        doc["output"] = {{"category", output->category}, {"rules", output->rules}};
    } else {
        doc["output"] = nullptr;
    }
    if (transition) {
        doc["transition"] = {{"category", transition->category}, {"rules", transition->rules}};
    } else {
        doc["transition"] = nullptr;
    }
    if (forbidden_edges) {
        json edges = json::array();
        for (const auto& e : *forbidden_edges)
            edges.push_back({{"from", e.from}, {"to", e.to}, {"reason", e.reason}});
        doc["forbidden_edges"] = edges;
    } else {
        doc["forbidden_edges"] = nullptr;
    }
    if (argument) {
        json per_tool = json::object();
        for (const auto& [tool, params] : argument->per_tool) {
            json list = json::array();
            for (const auto& p : params) list.push_back(param_spec_to_json(p));
            per_tool[tool] = list;
        }
        doc["argument"] = {{"per_tool", per_tool}, {"policy_notes", argument->policy_notes}};
    } else {
        doc["argument"] = nullptr;
    }
    if (plan) {
        json steps = json::array();
        for (const auto& s : plan->steps)
            steps.push_back({{"tool", s.tool}, {"expectation", s.expectation}});
        doc["plan"] = {{"steps", steps}};
    } else {
        doc["plan"] = nullptr;
    }
    if (final_state) {
        doc["final_state"] = {{"description", final_state->description}};
    } else {
        doc["final_state"] = nullptr;
    }
    doc["errors"] = category_errors;
    doc["warnings"] = warnings;
    return doc;
}

SpecSuite SpecSuite::from_json(const json& doc) {
    SpecSuite suite;
    if (doc.contains("output") && !doc.at("output").is_null()) {
        RuleList rules;
        rules.category = doc.at("output").value("category", "output");
        for (const auto& r : doc.at("output").at("rules")) rules.rules.push_back(r.get<std::string>());
        suite.output = std::move(rules);
    }
    if (doc.contains("transition") && !doc.at("transition").is_null()) {
        RuleList rules;
        rules.category = doc.at("transition").value("category", "transition");
        for (const auto& r : doc.at("transition").at("rules"))
            rules.rules.push_back(r.get<std::string>());
        suite.transition = std::move(rules);
    }
    if (doc.contains("forbidden_edges") && !doc.at("forbidden_edges").is_null()) {
        std::vector<ForbiddenEdge> edges;
        for (const auto& e : doc.at("forbidden_edges"))
            edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                             e.value("reason", std::string{})});
        suite.forbidden_edges = std::move(edges);
    }
    if (doc.contains("argument") && !doc.at("argument").is_null()) {
        ArgumentSpec spec;
        for (const auto& [tool, params] : doc.at("argument").at("per_tool").items()) {
            std::vector<ParamSpec> list;
            for (const auto& p : params) list.push_back(param_spec_from_json(p));
            spec.per_tool[tool] = std::move(list);
        }
        for (const auto& n : doc.at("argument").at("policy_notes"))
            spec.policy_notes.push_back(n.get<std::string>());
        suite.argument = std::move(spec);
    }
    if (doc.contains("plan") && !doc.at("plan").is_null()) {
        PredictedPlan plan;
        for (const auto& s : doc.at("plan").at("steps"))
            plan.steps.push_back({s.at("tool").get<std::string>(),
                                  s.value("expectation", std::string{})});
        suite.plan = std::move(plan);
    }
    if (doc.contains("final_state") && !doc.at("final_state").is_null())
        suite.final_state = PredictedFinalState{doc.at("final_state").at("description").get<std::string>()};
    if (doc.contains("errors")) {
        for (const auto& [key, value] : doc.at("errors").items())
            suite.category_errors[key] = value.get<std::string>();
    }
    if (doc.contains("warnings")) {
        for (const auto& w : doc.at("warnings")) suite.warnings.push_back(w.get<std::string>());
    }
    return suite;
}

}  // namespace agentaudit
