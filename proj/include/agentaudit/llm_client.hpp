#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace agentaudit {

/// {name} placeholder substitution. Placeholders are single identifiers in
/// braces; anything else (JSON literals, [number] markers) is left verbatim.
/// Substituted values are not re-scanned. Throws MissingVariableError.
std::string render_placeholders(const std::string& text,
                                const std::map<std::string, std::string>& variables);

/// FNV-1a 64-bit hex digest, used to key fixture responses by prompt content.
std::string content_digest(std::string_view text);

/// Loads prompt assets (*.txt, id = file stem) from a directory.
class TemplateStore {
public:
    static TemplateStore load(const std::filesystem::path& dir);

    bool contains(const std::string& template_id) const;
    const std::string& raw(const std::string& template_id) const;  // UnknownTemplateError
    std::string render(const std::string& template_id,
                       const std::map<std::string, std::string>& variables) const;

private:
    std::map<std::string, std::string> templates_;
};

struct JudgeRequest {
    std::string template_id;
    std::map<std::string, std::string> variables;
    /// Material appended after the rendered template (e.g. the user intent for
    /// templates that carry no placeholder for it). May be empty.
    std::string extra_context;
    std::string model;
    int max_attempts = 3;
};

struct JudgeResponse {
    std::string text;
    int attempts_used = 1;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const std::string& prompt, const std::string& model) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic backend reading <digest>.txt records from a directory.
class FixtureBackend : public Backend {
public:
    explicit FixtureBackend(std::filesystem::path dir);
    std::string complete(const std::string& prompt, const std::string& model) override;
    std::string name() const override { return "fixture"; }

    static void store(const std::filesystem::path& dir, const std::string& prompt,
                      const std::string& response);

private:
    std::filesystem::path dir_;
};

/// Test/support backend delegating to a callable.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::function<std::string(const std::string&)> fn)
        : fn_(std::move(fn)) {}
    std::string complete(const std::string& prompt, const std::string&) override {
        return fn_(prompt);
    }
    std::string name() const override { return "scripted"; }

private:
    std::function<std::string(const std::string&)> fn_;
};

/// Chat-completion HTTP backend. API key comes from the environment
/// (AGENTAUDIT_API_KEY, falling back to OPENAI_API_KEY).
class HttpBackend : public Backend {
public:
    HttpBackend(std::string host, std::string path = "/v1/chat/completions");
    std::string complete(const std::string& prompt, const std::string& model) override;
    std::string name() const override { return "http"; }

private:
    std::string host_;
    std::string path_;
    std::string api_key_;
};

struct ClientConfig {
    std::string default_model = "gpt-5-mini";
    int max_parallel = 8;
    int retry_base_delay_ms = 250;
};

/// Provider-agnostic judging client: renders templates, dispatches to the
/// configured backend with bounded parallelism, and retries transient
/// transport failures with exponential backoff.
class LlmClient {
public:
    LlmClient(TemplateStore templates, std::shared_ptr<Backend> backend, ClientConfig config = {});

    const TemplateStore& templates() const { return templates_; }
    const std::string& default_model() const { return config_.default_model; }
    std::string backend_name() const { return backend_->name(); }

    std::string render(const JudgeRequest& request) const;
    JudgeResponse complete(const JudgeRequest& request);

private:
    class Slot;

    TemplateStore templates_;
    std::shared_ptr<Backend> backend_;
    ClientConfig config_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

}  // namespace agentaudit
