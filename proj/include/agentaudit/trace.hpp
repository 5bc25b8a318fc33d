#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace agentaudit {

using json = nlohmann::ordered_json;

enum class Role { System, User, Assistant, Tool };

std::string to_string(Role role);
Role role_from_string(const std::string& text);

/// One tool invocation issued by the assistant.
struct ToolCall {
    std::string id;
    std::string name;
    json arguments = json::object();

    bool operator==(const ToolCall&) const = default;
};

struct Message {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCall> tool_calls;               // assistant only
    std::optional<std::string> tool_call_id;        // tool only

    bool operator==(const Message&) const = default;
};

enum class ParamType { String, Number, Integer, Boolean, Object, Array };

std::string to_string(ParamType type);
ParamType param_type_from_string(const std::string& text);

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::String;
    bool required = false;
    std::optional<std::vector<json>> enum_values;
    std::optional<double> min_value;
    std::optional<double> max_value;
    std::optional<std::string> pattern;

    bool operator==(const ParamSpec&) const = default;
};

struct ToolSchema {
    std::string name;
    std::string description;
    std::vector<ParamSpec> parameters;

    bool operator==(const ToolSchema&) const = default;
};

/// Optional per-trace metadata. Known fields are first-class; anything else
/// from the source format is preserved verbatim under `extra`.
struct TraceMetadata {
    std::optional<std::string> task_description;
    std::optional<json> init_state;
    std::optional<std::string> domain;
    std::optional<std::string> source_format;
    std::optional<double> outcome_reward;
    json extra = json::object();

    bool empty() const;
    bool operator==(const TraceMetadata&) const = default;
};

/// The self-contained normalized artifact: system prompt, tool schemas,
/// ordered message log, and optional metadata.
struct NormalizedTrace {
    std::string trace_id;
    std::string system_prompt;
    std::vector<ToolSchema> tools;
    std::vector<Message> messages;
    TraceMetadata metadata;

    json to_json() const;
    static NormalizedTrace from_json(const json& doc);

    bool operator==(const NormalizedTrace&) const = default;
};

/// A structural rule breach found by validate_trace. message_index is -1 for
/// trace-level violations.
struct StructuralViolation {
    int message_index = -1;
    std::string rule;
    std::string detail;
};

std::vector<StructuralViolation> validate_trace(const NormalizedTrace& trace);

/// All tool names in message order; intra-message call order preserved.
std::vector<std::string> tool_call_sequence(const NormalizedTrace& trace);

/// Plain-text transcript with role labels; tool calls rendered as
/// name(arguments). The raw variant (include_tool_responses = false) omits
/// tool response messages.
std::string render_conversation(const NormalizedTrace& trace, bool include_tool_responses);

const ToolSchema* find_tool(const std::vector<ToolSchema>& tools, std::string_view name);

json param_spec_to_json(const ParamSpec& spec);
ParamSpec param_spec_from_json(const json& doc);
json tool_schema_to_json(const ToolSchema& schema);
ToolSchema tool_schema_from_json(const json& doc);

}  // namespace agentaudit
