#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "agentaudit/aggregation.hpp"
#include "agentaudit/errors.hpp"
#include "agentaudit/evaluators.hpp"
#include "agentaudit/importers.hpp"
#include "agentaudit/llm_client.hpp"
#include "agentaudit/reporting.hpp"
#include "agentaudit/spec_extraction.hpp"

namespace fs = std::filesystem;
using namespace agentaudit;

namespace {

struct CommonOptions {
    std::string input;
    std::string out_dir = "out";
    std::string format;
    std::string model = "gpt-5-mini";
    std::string prompts_dir = AGENTAUDIT_DEFAULT_PROMPT_DIR;
    std::string fixtures_dir;
    std::string rewards_file;
    std::string backend_host = "https://api.openai.com";
    int parallelism = 1;
    double threshold = 65.0;
    std::string group_by = "none";
    std::string metric = "final";
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--input", opts.input, "Input file or directory")->required();
    cmd->add_option("--out-dir", opts.out_dir, "Output directory");
    cmd->add_option("--format", opts.format, "Force input format (default: autodetect)");
    cmd->add_option("--model", opts.model, "Judge model name");
    cmd->add_option("--prompts-dir", opts.prompts_dir, "Prompt asset directory");
    cmd->add_option("--fixtures-dir", opts.fixtures_dir,
                    "Fixture response directory (enables the deterministic backend)");
    cmd->add_option("--rewards-file", opts.rewards_file, "Sidecar trace_id -> reward JSON table");
    cmd->add_option("--backend-host", opts.backend_host, "Chat-completion API host");
    cmd->add_option("--parallelism", opts.parallelism, "Worker pool width");
}

LlmClient make_client(const CommonOptions& opts) {
    ClientConfig config;
    config.default_model = opts.model;
    config.max_parallel = std::max(1, opts.parallelism);
    std::shared_ptr<Backend> backend;
    if (!opts.fixtures_dir.empty()) {
        backend = std::make_shared<FixtureBackend>(opts.fixtures_dir);
        config.retry_base_delay_ms = 0;
    } else {
        backend = std::make_shared<HttpBackend>(opts.backend_host);
    }
    return LlmClient(TemplateStore::load(opts.prompts_dir), std::move(backend), config);
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AuditError("cannot open " + path.string());
    return json::parse(in);
}

void write_json_file(const fs::path& path, const json& doc) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << "\n";
}

std::vector<fs::path> input_files(const fs::path& input) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw EmptyInputError("no input files under " + input.string());
    return files;
}

int cmd_import(const CommonOptions& opts) {
    ImporterRegistry registry = ImporterRegistry::with_default_adapters();
    int failures = 0;
    for (const auto& file : input_files(opts.input)) {
        try {
            json raw = load_json_file(file);
            auto traces = opts.format.empty()
                              ? registry.import_auto(raw, file.stem().string())
                              : registry.import_trace(raw, opts.format, file.stem().string());
            for (const auto& trace : traces) {
                write_json_file(fs::path(opts.out_dir) / (trace.trace_id + ".json"),
                                trace.to_json());
                std::cout << "imported " << trace.trace_id << "\n";
            }
        } catch (const std::exception& e) {
            std::cerr << "failed " << file.string() << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_extract(const CommonOptions& opts) {
    LlmClient client = make_client(opts);
    ImporterRegistry registry = ImporterRegistry::with_default_adapters();
    int failures = 0;
    for (const auto& file : input_files(opts.input)) {
        try {
            json raw = load_json_file(file);
            for (const auto& trace : registry.import_auto(raw, file.stem().string())) {
                SpecSuite specs = extract_spec_suite(trace, client);
                write_json_file(fs::path(opts.out_dir) / (trace.trace_id + ".specs.json"),
                                specs.to_json());
                std::cout << "extracted " << trace.trace_id << "\n";
            }
        } catch (const std::exception& e) {
            std::cerr << "failed " << file.string() << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const CommonOptions& opts) {
    LlmClient client = make_client(opts);
    BatchConfig config;
    config.out_dir = opts.out_dir;
    config.format = opts.format;
    config.parallelism = opts.parallelism;
    config.rewards_file = opts.rewards_file;
    BatchResult result = run_batch(opts.input, config, client);
    for (const auto& report : result.reports)
        std::cout << report.trace_id << " final_score=" << report.final_score << "\n";
    for (const auto& failure : result.failures)
        std::cerr << "failed " << failure.source << ": " << failure.error << "\n";
    return result.failures.empty() ? 0 : 1;
}

int cmd_report(const CommonOptions& opts) {
    std::vector<TraceReport> reports;
    for (const auto& file : input_files(opts.input)) {
        reports.push_back(report_from_artifact(load_json_file(file)));
    }
    auto summaries = summarize(reports, opts.group_by, opts.threshold);
    write_json_file(fs::path(opts.out_dir) / "summary.json", summaries_to_json(summaries));
    {
        fs::create_directories(opts.out_dir);
        std::ofstream csv(fs::path(opts.out_dir) / "summary.csv", std::ios::binary);
        csv << summaries_to_csv(summaries);
    }
    std::cout << summaries_to_csv(summaries);
    try {
        auto analysis = threshold_analysis(reports, opts.metric, opts.threshold);
        write_json_file(fs::path(opts.out_dir) / "classification.json",
                        analysis_to_json(analysis));
        std::cout << "recall_of_failures=" << analysis.recall_of_failures << " roc_auc=";
        if (analysis.auc_defined) std::cout << analysis.roc_auc;
        else std::cout << "undefined";
        std::cout << "\n";
    } catch (const NoRewardDataError&) {
        std::cout << "no outcome rewards present; skipping threshold analysis\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audits agentic execution traces against specifications extracted "
                 "from the agent's own system prompt, tool schemas, and task description"};
    app.set_config("--config");
    app.require_subcommand(1);

    CommonOptions opts;
    auto* import_cmd = app.add_subcommand("import", "Normalize raw trace files");
    add_common_flags(import_cmd, opts);
    auto* extract_cmd = app.add_subcommand("extract", "Extract specification suites");
    add_common_flags(extract_cmd, opts);
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Run the full evaluation pipeline");
    add_common_flags(evaluate_cmd, opts);
    auto* report_cmd = app.add_subcommand("report", "Summarize artifact directories");
    add_common_flags(report_cmd, opts);
    report_cmd->add_option("--threshold", opts.threshold, "Flagging threshold (default 65)");
    report_cmd->add_option("--group-by", opts.group_by, "Grouping: domain, model, none");
    report_cmd->add_option("--metric", opts.metric,
                           "Metric for threshold analysis: final or an evaluator id");

    CLI11_PARSE(app, argc, argv);

    try {
        if (import_cmd->parsed()) return cmd_import(opts);
        if (extract_cmd->parsed()) return cmd_extract(opts);
        if (evaluate_cmd->parsed()) return cmd_evaluate(opts);
        if (report_cmd->parsed()) return cmd_report(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
