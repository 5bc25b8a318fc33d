#pragma once

#include <functional>
#include <string>
#include <vector>

#include "agentaudit/trace.hpp"

namespace agentaudit {

/// Adapter from one raw trace format to NormalizedTrace. The converter
/// receives a single raw document (never a list) and a fallback id used when
/// the document carries none of its own.
struct FormatAdapter {
    std::string format_name;
    std::function<bool(const json&)> detector;
    std::function<NormalizedTrace(const json&, const std::string&)> converter;
};

class ImporterRegistry {
public:
    /// Registry with the built-in adapters: normalized, tau2, openai_messages.
    static ImporterRegistry with_default_adapters();

    void register_adapter(FormatAdapter adapter);

    /// First registered adapter whose detector accepts. Throws UnknownFormatError.
    std::string detect_format(const json& raw) const;

    /// Imports one raw document (or a list of documents, yielding trace ids
    /// suffixed by index). Every result passes validate_trace or the call
    /// throws MalformedTraceError.
    std::vector<NormalizedTrace> import_trace(const json& raw, const std::string& format,
                                              const std::string& fallback_id) const;

    std::vector<NormalizedTrace> import_auto(const json& raw, const std::string& fallback_id) const;

private:
    const FormatAdapter& adapter(const std::string& format) const;

    std::vector<FormatAdapter> adapters_;
};

}  // namespace agentaudit
