#include "agentaudit/importers.hpp"

#include <algorithm>

#include "agentaudit/errors.hpp"

namespace agentaudit {

namespace {

std::vector<ParamSpec> params_from_json_schema(const json& schema) {
    std::vector<ParamSpec> specs;
    if (!schema.is_object()) return specs;
    std::vector<std::string> required;
    if (schema.contains("required")) {
        for (const auto& r : schema.at("required")) required.push_back(r.get<std::string>());
    }
    if (!schema.contains("properties")) return specs;
    for (const auto& [name, prop] : schema.at("properties").items()) {
        ParamSpec spec;
        spec.name = name;
        if (prop.contains("type") && prop.at("type").is_string()) {
            try {
                spec.type = param_type_from_string(prop.at("type").get<std::string>());
            } catch (const MalformedTraceError&) {
                spec.type = ParamType::Object;
            }
        }
        spec.required = std::find(required.begin(), required.end(), name) != required.end();
        if (prop.contains("enum")) {
            std::vector<json> values;
            for (const auto& v : prop.at("enum")) values.push_back(v);
            spec.enum_values = std::move(values);
        }
        if (prop.contains("minimum")) spec.min_value = prop.at("minimum").get<double>();
        if (prop.contains("maximum")) spec.max_value = prop.at("maximum").get<double>();
        if (prop.contains("pattern")) spec.pattern = prop.at("pattern").get<std::string>();
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::vector<ToolSchema> tools_from_raw(const json& raw_tools) {
    std::vector<ToolSchema> tools;
    if (!raw_tools.is_array()) return tools;
    for (const auto& entry : raw_tools) {
        // Accept both {"type":"function","function":{...}} and flat {...}.
        const json& fn = entry.contains("function") ? entry.at("function") : entry;
        ToolSchema tool;
        tool.name = fn.at("name").get<std::string>();
        tool.description = fn.value("description", std::string{});
        if (fn.contains("parameters")) tool.parameters = params_from_json_schema(fn.at("parameters"));
        tools.push_back(std::move(tool));
    }
    return tools;
}

ToolCall tool_call_from_raw(const json& raw) {
    ToolCall call;
    call.id = raw.value("id", std::string{});
    if (raw.contains("function")) {
        const json& fn = raw.at("function");
        call.name = fn.at("name").get<std::string>();
        const json& args = fn.at("arguments");
        if (args.is_string()) {
            try {
                call.arguments = json::parse(args.get<std::string>());
            } catch (const json::parse_error&) {
                throw MalformedTraceError("unparseable tool call arguments for " + call.name);
            }
        } else {
            call.arguments = args;
        }
    } else {
        call.name = raw.at("name").get<std::string>();
        call.arguments = raw.value("arguments", json::object());
        if (call.arguments.is_string()) {
            try {
                call.arguments = json::parse(call.arguments.get<std::string>());
            } catch (const json::parse_error&) {
                throw MalformedTraceError("unparseable tool call arguments for " + call.name);
            }
        }
    }
    if (call.name.empty()) throw MalformedTraceError("tool call with empty name");
    return call;
}

std::vector<Message> messages_from_raw(const json& raw_messages, std::string* system_prompt) {
    if (!raw_messages.is_array())
        throw MalformedTraceError("messages is not an array");
    std::vector<Message> messages;
    int counter = 0;
    for (const auto& entry : raw_messages) {
        if (!entry.is_object() || !entry.contains("role"))
            throw MalformedTraceError("unparseable message entry");
        Role role = role_from_string(entry.at("role").get<std::string>());
        if (role == Role::System) {
            // Leading system entry becomes the system prompt.
            if (system_prompt && system_prompt->empty() && messages.empty())
                *system_prompt = entry.value("content", std::string{});
            continue;
        }
        Message msg;
        msg.role = role;
        const json content = entry.value("content", json{});
        msg.content = content.is_string() ? content.get<std::string>() : std::string{};
        if (entry.contains("tool_calls") && entry.at("tool_calls").is_array()) {
            for (const auto& call : entry.at("tool_calls")) {
                ToolCall parsed = tool_call_from_raw(call);
                if (parsed.id.empty()) parsed.id = "call_" + std::to_string(counter);
                msg.tool_calls.push_back(std::move(parsed));
                ++counter;
            }
        }
        if (entry.contains("tool_call_id") && entry.at("tool_call_id").is_string())
            msg.tool_call_id = entry.at("tool_call_id").get<std::string>();
        messages.push_back(std::move(msg));
    }
    return messages;
}

void require_valid(const NormalizedTrace& trace, const std::string& format) {
    auto violations = validate_trace(trace);
    if (!violations.empty()) {
        std::string detail = violations.front().rule;
        throw MalformedTraceError(format + " import produced invalid trace: " + detail);
    }
}

NormalizedTrace convert_tau2(const json& raw, const std::string& fallback_id) {
    if (!raw.contains("messages")) throw MalformedTraceError("tau2 document has no messages");
    NormalizedTrace trace;
    trace.trace_id = raw.value("id", fallback_id);
    trace.system_prompt = raw.value("system_prompt", std::string{});
    if (raw.contains("tools")) trace.tools = tools_from_raw(raw.at("tools"));
    trace.messages = messages_from_raw(raw.at("messages"), &trace.system_prompt);
    if (raw.contains("task") && raw.at("task").is_object()) {
        const json& task = raw.at("task");
        if (task.contains("description"))
            trace.metadata.task_description = task.at("description").get<std::string>();
        if (task.contains("initial_state")) trace.metadata.init_state = task.at("initial_state");
        if (task.contains("domain")) trace.metadata.domain = task.at("domain").get<std::string>();
        if (task.contains("id")) trace.metadata.extra["task_id"] = task.at("id");
    }
    if (raw.contains("reward") && raw.at("reward").is_number())
        trace.metadata.outcome_reward = raw.at("reward").get<double>();
    trace.metadata.source_format = "tau2";
    require_valid(trace, "tau2");
    return trace;
}

NormalizedTrace convert_openai_messages(const json& raw, const std::string& fallback_id) {
    const json& raw_messages = raw.is_array() ? raw : raw.at("messages");
    NormalizedTrace trace;
    trace.trace_id = raw.is_object() ? raw.value("id", fallback_id) : fallback_id;
    if (raw.is_object() && raw.contains("tools")) trace.tools = tools_from_raw(raw.at("tools"));
    trace.messages = messages_from_raw(raw_messages, &trace.system_prompt);
    if (trace.system_prompt.empty())
        throw MalformedTraceError("openai_messages document has no system entry");
    trace.metadata.source_format = "openai_messages";
    require_valid(trace, "openai_messages");
    return trace;
}

NormalizedTrace convert_normalized(const json& raw, const std::string& /*fallback_id*/) {
    NormalizedTrace trace;
    try {
        trace = NormalizedTrace::from_json(raw);
    } catch (const json::exception& e) {
        throw MalformedTraceError(std::string("invalid normalized trace: ") + e.what());
    }
    require_valid(trace, "normalized");
    return trace;
}

bool detect_normalized(const json& raw) {
    return raw.is_object() && raw.contains("trace_id") && raw.contains("system_prompt") &&
           raw.contains("messages");
}

bool detect_tau2(const json& raw) {
    return raw.is_object() && raw.contains("task") && raw.contains("messages");
}

bool detect_openai_messages(const json& raw) {
    if (raw.is_array()) {
        return !raw.empty() &&
               std::all_of(raw.begin(), raw.end(),
                           [](const json& m) { return m.is_object() && m.contains("role"); });
    }
    return raw.is_object() && raw.contains("messages") && raw.at("messages").is_array() &&
           !raw.contains("task") && !raw.contains("trace_id");
}

}  // namespace

ImporterRegistry ImporterRegistry::with_default_adapters() {
    ImporterRegistry registry;
    registry.register_adapter({"normalized", detect_normalized, convert_normalized});
    registry.register_adapter({"tau2", detect_tau2, convert_tau2});
    registry.register_adapter({"openai_messages", detect_openai_messages, convert_openai_messages});
    return registry;
}

void ImporterRegistry::register_adapter(FormatAdapter adapter) {
    for (const auto& existing : adapters_) {
        if (existing.format_name == adapter.format_name)
            throw AuditError("adapter already registered: " + adapter.format_name);
    }
    adapters_.push_back(std::move(adapter));
}

std::string ImporterRegistry::detect_format(const json& raw) const {
    for (const auto& adapter : adapters_) {
        if (adapter.detector(raw)) return adapter.format_name;
    }
    // A list of per-trace documents is detected through its first element.
    if (raw.is_array() && !raw.empty()) {
        for (const auto& adapter : adapters_) {
            if (adapter.detector(raw.front())) return adapter.format_name;
        }
    }
    throw UnknownFormatError("no registered adapter accepts this document");
}

const FormatAdapter& ImporterRegistry::adapter(const std::string& format) const {
    for (const auto& a : adapters_) {
        if (a.format_name == format) return a;
    }
    throw UnknownFormatError("no adapter registered for format: " + format);
}

std::vector<NormalizedTrace> ImporterRegistry::import_trace(const json& raw,
                                                            const std::string& format,
                                                            const std::string& fallback_id) const {
    const FormatAdapter& a = adapter(format);
    std::vector<NormalizedTrace> traces;
    if (raw.is_array() && !a.detector(raw)) {
        for (size_t i = 0; i < raw.size(); ++i) {
            std::string id = fallback_id + "-" + std::to_string(i);
            NormalizedTrace trace = a.converter(raw.at(i), id);
            if (raw.at(i).is_object() && raw.at(i).contains("id"))
                trace.trace_id += "-" + std::to_string(i);
            traces.push_back(std::move(trace));
        }
        if (traces.empty()) throw MalformedTraceError("empty trace list");
    } else {
        traces.push_back(a.converter(raw, fallback_id));
    }
    return traces;
}

std::vector<NormalizedTrace> ImporterRegistry::import_auto(const json& raw,
                                                           const std::string& fallback_id) const {
    return import_trace(raw, detect_format(raw), fallback_id);
}

}  // namespace agentaudit
