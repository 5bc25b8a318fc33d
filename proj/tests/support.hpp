#pragma once

// Shared helpers for the test binaries: fixture loading and scripted
// marker-matched backends.

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentaudit/errors.hpp"
#include "agentaudit/importers.hpp"
#include "agentaudit/llm_client.hpp"
#include "agentaudit/trace.hpp"

namespace test_support {

namespace fs = std::filesystem;
using agentaudit::json;

inline fs::path fixture_dir() { return fs::path(AGENTAUDIT_FIXTURE_DIR); }
inline fs::path prompt_dir() { return fs::path(AGENTAUDIT_DEFAULT_PROMPT_DIR); }

inline json load_fixture(const std::string& name) {
    std::ifstream in(fixture_dir() / name, std::ios::binary);
    if (!in) throw agentaudit::AuditError("missing fixture: " + name);
    return json::parse(in);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Responds with the first entry whose marker substring occurs in the prompt.
inline std::shared_ptr<agentaudit::Backend> scripted_from(const json& responses) {
    std::vector<std::pair<std::string, std::string>> table;
    for (const auto& entry : responses)
        table.emplace_back(entry.at("marker").get<std::string>(),
                           entry.at("response").get<std::string>());
    return std::make_shared<agentaudit::ScriptedBackend>(
        [table = std::move(table)](const std::string& prompt) {
            for (const auto& [marker, response] : table) {
                if (prompt.find(marker) != std::string::npos) return response;
            }
            throw agentaudit::FixtureMissError("no scripted response matches prompt");
        });
}

/// Wraps another backend and persists every (prompt, response) pair as a
/// fixture record, so a FixtureBackend replay of the same pipeline hits.
class RecordingBackend : public agentaudit::Backend {
public:
    RecordingBackend(std::shared_ptr<agentaudit::Backend> inner, fs::path dir)
        : inner_(std::move(inner)), dir_(std::move(dir)) {}

    std::string complete(const std::string& prompt, const std::string& model) override {
        std::string response = inner_->complete(prompt, model);
        agentaudit::FixtureBackend::store(dir_, prompt, response);
        return response;
    }
    std::string name() const override { return "fixture"; }

private:
    std::shared_ptr<agentaudit::Backend> inner_;
    fs::path dir_;
};

inline agentaudit::NormalizedTrace airline_trace() {
    auto registry = agentaudit::ImporterRegistry::with_default_adapters();
    return registry.import_auto(load_fixture("tau2_airline.json"), "tau2_airline").front();
}

inline agentaudit::LlmClient airline_client(agentaudit::ClientConfig config = {}) {
    config.retry_base_delay_ms = 0;
    return agentaudit::LlmClient(agentaudit::TemplateStore::load(prompt_dir()),
                                 scripted_from(load_fixture("airline_responses.json")), config);
}

}  // namespace test_support
