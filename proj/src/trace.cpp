#include "agentaudit/trace.hpp"

#include <algorithm>
#include <set>

#include "agentaudit/errors.hpp"

namespace agentaudit {

std::string to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

Role role_from_string(const std::string& text) {
    if (text == "system") return Role::System;
    if (text == "user") return Role::User;
    if (text == "assistant") return Role::Assistant;
    if (text == "tool") return Role::Tool;
    throw MalformedTraceError("unknown message role: " + text);
}

std::string to_string(ParamType type) {
    switch (type) {
        case ParamType::String: return "string";
        case ParamType::Number: return "number";
        case ParamType::Integer: return "integer";
        case ParamType::Boolean: return "boolean";
        case ParamType::Object: return "object";
        case ParamType::Array: return "array";
    }
    return "string";
}

ParamType param_type_from_string(const std::string& text) {
    if (text == "string") return ParamType::String;
    if (text == "number") return ParamType::Number;
    if (text == "integer") return ParamType::Integer;
    if (text == "boolean") return ParamType::Boolean;
    if (text == "object") return ParamType::Object;
    if (text == "array") return ParamType::Array;
    throw MalformedTraceError("unknown parameter type: " + text);
}

bool TraceMetadata::empty() const {
    return !task_description && !init_state && !domain && !source_format &&
           !outcome_reward && extra.empty();
}

json param_spec_to_json(const ParamSpec& spec) {
    json doc;
    doc["name"] = spec.name;
    doc["type"] = to_string(spec.type);
    doc["required"] = spec.required;
    if (spec.enum_values) doc["enum"] = *spec.enum_values;
    if (spec.min_value) doc["minimum"] = *spec.min_value;
    if (spec.max_value) doc["maximum"] = *spec.max_value;
    if (spec.pattern) doc["pattern"] = *spec.pattern;
    return doc;
}

ParamSpec param_spec_from_json(const json& doc) {
    ParamSpec spec;
    spec.name = doc.at("name").get<std::string>();
    spec.type = param_type_from_string(doc.at("type").get<std::string>());
    spec.required = doc.value("required", false);
    if (doc.contains("enum")) {
        std::vector<json> values;
        for (const auto& v : doc.at("enum")) values.push_back(v);
        spec.enum_values = std::move(values);
    }
    if (doc.contains("minimum")) spec.min_value = doc.at("minimum").get<double>();
    if (doc.contains("maximum")) spec.max_value = doc.at("maximum").get<double>();
    if (doc.contains("pattern")) spec.pattern = doc.at("pattern").get<std::string>();
    return spec;
}

json tool_schema_to_json(const ToolSchema& schema) {
    json doc;
    doc["name"] = schema.name;
    doc["description"] = schema.description;
    doc["parameters"] = json::array();
    for (const auto& p : schema.parameters) doc["parameters"].push_back(param_spec_to_json(p));
    return doc;
}

ToolSchema tool_schema_from_json(const json& doc) {
    ToolSchema schema;
    schema.name = doc.at("name").get<std::string>();
    schema.description = doc.value("description", std::string{});
    if (doc.contains("parameters")) {
        for (const auto& p : doc.at("parameters")) schema.parameters.push_back(param_spec_from_json(p));
    }
    return schema;
}

namespace {

json message_to_json(const Message& msg) {
    json doc;
    doc["role"] = to_string(msg.role);
    doc["content"] = msg.content;
    if (msg.role == Role::Assistant) {
        doc["tool_calls"] = json::array();
        for (const auto& call : msg.tool_calls) {
            json c;
            c["id"] = call.id;
            c["name"] = call.name;
            c["arguments"] = call.arguments;
            doc["tool_calls"].push_back(c);
        }
    }
    if (msg.tool_call_id) doc["tool_call_id"] = *msg.tool_call_id;
    return doc;
}

Message message_from_json(const json& doc) {
    Message msg;
    msg.role = role_from_string(doc.at("role").get<std::string>());
    msg.content = doc.value("content", std::string{});
    if (doc.contains("tool_calls")) {
        for (const auto& c : doc.at("tool_calls")) {
            ToolCall call;
            call.id = c.at("id").get<std::string>();
            call.name = c.at("name").get<std::string>();
            call.arguments = c.value("arguments", json::object());
            msg.tool_calls.push_back(std::move(call));
        }
    }
    if (doc.contains("tool_call_id") && !doc.at("tool_call_id").is_null())
        msg.tool_call_id = doc.at("tool_call_id").get<std::string>();
    return msg;
}

}  // namespace

json NormalizedTrace::to_json() const {
    json doc;
    doc["trace_id"] = trace_id;
    doc["system_prompt"] = system_prompt;
    doc["tools"] = json::array();
    for (const auto& t : tools) doc["tools"].push_back(tool_schema_to_json(t));
    doc["messages"] = json::array();
    for (const auto& m : messages) doc["messages"].push_back(message_to_json(m));
    json meta = json::object();
    if (metadata.task_description) meta["task_description"] = *metadata.task_description;
    if (metadata.init_state) meta["init_state"] = *metadata.init_state;
    if (metadata.domain) meta["domain"] = *metadata.domain;
    if (metadata.source_format) meta["source_format"] = *metadata.source_format;
    if (metadata.outcome_reward) meta["outcome_reward"] = *metadata.outcome_reward;
    for (const auto& [key, value] : metadata.extra.items()) meta[key] = value;
    doc["metadata"] = meta;
    return doc;
}

NormalizedTrace NormalizedTrace::from_json(const json& doc) {
    NormalizedTrace trace;
    trace.trace_id = doc.at("trace_id").get<std::string>();
    trace.system_prompt = doc.at("system_prompt").get<std::string>();
    if (doc.contains("tools")) {
        for (const auto& t : doc.at("tools")) trace.tools.push_back(tool_schema_from_json(t));
    }
    for (const auto& m : doc.at("messages")) trace.messages.push_back(message_from_json(m));
    if (doc.contains("metadata") && doc.at("metadata").is_object()) {
        const json& meta = doc.at("metadata");
        for (const auto& [key, value] : meta.items()) {
            if (key == "task_description") trace.metadata.task_description = value.get<std::string>();
            else if (key == "init_state") trace.metadata.init_state = value;
            else if (key == "domain") trace.metadata.domain = value.get<std::string>();
            else if (key == "source_format") trace.metadata.source_format = value.get<std::string>();
            else if (key == "outcome_reward") trace.metadata.outcome_reward = value.get<double>();
            else trace.metadata.extra[key] = value;
        }
    }
    return trace;
}

std::vector<StructuralViolation> validate_trace(const NormalizedTrace& trace) {
    std::vector<StructuralViolation> violations;
    if (trace.system_prompt.empty())
        violations.push_back({-1, "missing system prompt", "system_prompt is empty"});

    bool has_non_system = std::any_of(trace.messages.begin(), trace.messages.end(),
                                      [](const Message& m) { return m.role != Role::System; });
    if (!has_non_system)
        violations.push_back({-1, "empty message log", "no non-system message present"});

    std::set<std::string> tool_names;
    for (const auto& tool : trace.tools) {
        if (!tool_names.insert(tool.name).second)
            violations.push_back({-1, "duplicate tool schema", "tool name repeated: " + tool.name});
    }

    std::set<std::string> seen_call_ids;
    for (int i = 0; i < static_cast<int>(trace.messages.size()); ++i) {
        const Message& msg = trace.messages[i];
        if (!msg.tool_calls.empty() && msg.role != Role::Assistant)
            violations.push_back({i, "tool calls on non-assistant message",
                                  "role is " + to_string(msg.role)});
        if (msg.role == Role::Tool && !msg.tool_call_id)
            violations.push_back({i, "tool message without tool_call_id", ""});
        if (msg.role != Role::Tool && msg.tool_call_id)
            violations.push_back({i, "tool_call_id on non-tool message",
                                  "role is " + to_string(msg.role)});
        if (msg.role == Role::Tool && msg.tool_call_id &&
            !seen_call_ids.contains(*msg.tool_call_id))
            violations.push_back({i, "dangling tool response",
                                  "tool_call_id " + *msg.tool_call_id + " matches no prior call"});
        for (const auto& call : msg.tool_calls) {
            if (call.name.empty())
                violations.push_back({i, "empty tool call name", "call id " + call.id});
            if (!seen_call_ids.insert(call.id).second)
                violations.push_back({i, "duplicate tool call id", call.id});
        }
    }
    return violations;
}

std::vector<std::string> tool_call_sequence(const NormalizedTrace& trace) {
    std::vector<std::string> names;
    for (const auto& msg : trace.messages) {
        for (const auto& call : msg.tool_calls) names.push_back(call.name);
    }
    return names;
}

std::string render_conversation(const NormalizedTrace& trace, bool include_tool_responses) {
    std::string out;
    for (const auto& msg : trace.messages) {
        if (msg.role == Role::Tool) {
            if (!include_tool_responses) continue;
            out += "[tool";
            if (msg.tool_call_id) out += " " + *msg.tool_call_id;
            out += "] " + msg.content + "\n";
            continue;
        }
        out += "[" + to_string(msg.role) + "] " + msg.content + "\n";
        for (const auto& call : msg.tool_calls) {
            out += "[" + to_string(msg.role) + "] calls " + call.name + "(" +
                   call.arguments.dump() + ")\n";
        }
    }
    if (!out.empty()) out.pop_back();
    return out;
}

const ToolSchema* find_tool(const std::vector<ToolSchema>& tools, std::string_view name) {
    for (const auto& tool : tools) {
        if (tool.name == name) return &tool;
    }
    return nullptr;
}

}  // namespace agentaudit
