#include "agentaudit/llm_client.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "agentaudit/errors.hpp"

namespace agentaudit {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::string render_placeholders(const std::string& text,
                                const std::map<std::string, std::string>& variables) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{' && i + 1 < text.size() && is_ident_start(text[i + 1])) {
            size_t j = i + 1;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            if (j < text.size() && text[j] == '}') {
                std::string name = text.substr(i + 1, j - i - 1);
                auto it = variables.find(name);
                if (it == variables.end()) throw MissingVariableError(name);
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += text[i];
        ++i;
    }
    return out;
}

std::string content_digest(std::string_view text) {
    uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

TemplateStore TemplateStore::load(const std::filesystem::path& dir) {
    TemplateStore store;
    if (!std::filesystem::is_directory(dir))
        throw UnknownTemplateError("prompt asset directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        store.templates_[entry.path().stem().string()] = buf.str();
    }
    return store;
}

bool TemplateStore::contains(const std::string& template_id) const {
    return templates_.contains(template_id);
}

const std::string& TemplateStore::raw(const std::string& template_id) const {
    auto it = templates_.find(template_id);
    if (it == templates_.end()) throw UnknownTemplateError("unknown template: " + template_id);
    return it->second;
}

std::string TemplateStore::render(const std::string& template_id,
                                  const std::map<std::string, std::string>& variables) const {
    return render_placeholders(raw(template_id), variables);
}

FixtureBackend::FixtureBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string FixtureBackend::complete(const std::string& prompt, const std::string&) {
    const auto path = dir_ / (content_digest(prompt) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FixtureMissError("no fixture response for digest " + content_digest(prompt));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void FixtureBackend::store(const std::filesystem::path& dir, const std::string& prompt,
                           const std::string& response) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (content_digest(prompt) + ".txt"), std::ios::binary);
    out << response;
}

HttpBackend::HttpBackend(std::string host, std::string path)
    : host_(std::move(host)), path_(std::move(path)) {
    if (const char* key = std::getenv("AGENTAUDIT_API_KEY")) api_key_ = key;
    else if (const char* fallback = std::getenv("OPENAI_API_KEY")) api_key_ = fallback;
}

std::string HttpBackend::complete(const std::string& prompt, const std::string& model) {
    httplib::Client client(host_);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    nlohmann::json body;
    body["model"] = model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = 0;

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw TransientBackendError("transport failure contacting " + host_);
    if (res->status == 429 || res->status >= 500)
        throw TransientBackendError("backend returned status " + std::to_string(res->status));
    if (res->status != 200)
        throw BackendUnavailableError("backend returned status " + std::to_string(res->status));
    try {
        auto doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailableError(std::string("malformed completion response: ") + e.what());
    }
}

LlmClient::LlmClient(TemplateStore templates, std::shared_ptr<Backend> backend, ClientConfig config)
    : templates_(std::move(templates)), backend_(std::move(backend)), config_(config) {}

std::string LlmClient::render(const JudgeRequest& request) const {
    std::string prompt = templates_.render(request.template_id, request.variables);
    if (!request.extra_context.empty()) {
        prompt += "\n\n";
        prompt += request.extra_context;
    }
    return prompt;
}

JudgeResponse LlmClient::complete(const JudgeRequest& request) {
    const std::string prompt = render(request);
    const std::string model = request.model.empty() ? config_.default_model : request.model;
    const int max_attempts = request.max_attempts > 0 ? request.max_attempts : 1;

    {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < config_.max_parallel; });
        ++in_flight_;
    }
    struct Release {
        LlmClient* client;
        ~Release() {
            {
                std::lock_guard lock(client->mutex_);
                --client->in_flight_;
            }
            client->cv_.notify_one();
        }
    } release{this};

    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        try {
            return {backend_->complete(prompt, model), attempt};
        } catch (const TransientBackendError& e) {
            last_error = e.what();
            if (attempt < max_attempts && config_.retry_base_delay_ms > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(config_.retry_base_delay_ms << (attempt - 1)));
            }
        }
    }
    throw BackendUnavailableError("backend unavailable after " + std::to_string(max_attempts) +
                                  " attempts: " + last_error);
}

}  // namespace agentaudit
