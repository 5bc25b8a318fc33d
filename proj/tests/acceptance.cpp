// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Each criterion is independent; a throw inside one marks it failed
// without stopping the rest.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "agentaudit/aggregation.hpp"
#include "agentaudit/errors.hpp"
#include "agentaudit/evaluators.hpp"
#include "agentaudit/importers.hpp"
#include "agentaudit/reporting.hpp"
#include "support.hpp"

using namespace agentaudit;
namespace fs = std::filesystem;

namespace {

struct Checker {
    std::ostringstream notes;
    bool ok = true;

    void expect(bool condition, const std::string& what) {
        if (condition) return;
        ok = false;
        notes << (notes.str().empty() ? "" : "; ") << what;
    }
};

EvaluatorResult result_of(EvaluatorId id, double score, bool included = true) {
    EvaluatorResult result;
    result.id = id;
    result.score = score;
    result.included = included;
    result.reasoning = "r";
    return result;
}

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("agentaudit_acc_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// 1: one critical evaluator at 85 gates seven otherwise perfect scores to 85.00.
void criterion_worked_example(Checker& check) {
    std::vector<EvaluatorResult> results;
    for (EvaluatorId id : kEvaluatorOrder)
        results.push_back(result_of(id, id == EvaluatorId::OutputSpec ? 85.0 : 100.0));
    AggregateOutcome outcome = aggregate_absolute_score(assign_tiers(results));
    double average = (3 * 85.0 + 3 * 100.0 + 2 * 100.0 + 2 * 100.0 + 3 * 100.0) / 13.0;
    check.expect(std::abs(average - 1255.0 / 13.0) < 1e-12, "weighted average mismatch");
    check.expect(average > 85.0, "average should sit above the gate");
    check.expect(outcome.exact == 85.0, "exact aggregate is not 85");
    check.expect(outcome.rounded == 85.0, "rounded aggregate is not 85.00");
}

// 2: on random configurations the aggregate never exceeds the weighted
// average nor any included critical score (tolerance 1e-9 before rounding).
void criterion_gate_bound(Checker& check) {
    std::mt19937 rng(20240817);
    for (int round = 0; round < 10000; ++round) {
        std::vector<EvaluatorResult> results;
        for (EvaluatorId id : kEvaluatorOrder) {
            EvaluatorResult r =
                result_of(id, (rng() % 100001) / 1000.0, rng() % 5 != 0);
            if (id == EvaluatorId::PredictedFinalState && rng() % 4 == 0)
                r.outcome_failure = true;
            results.push_back(std::move(r));
        }
        auto tiered = assign_tiers(results);
        double weighted_sum = 0.0, weight_total = 0.0, critical_min = 1e9;
        bool any_included = false;
        for (const auto& entry : tiered) {
            if (!entry.result.included) continue;
            any_included = true;
            weighted_sum += entry.weight * entry.result.score;
            weight_total += entry.weight;
            if (entry.tier == Tier::Critical)
                critical_min = std::min(critical_min, entry.result.score);
        }
        if (!any_included) {
            try {
                aggregate_absolute_score(tiered);
                check.expect(false, "empty aggregation did not raise");
            } catch (const NoIncludedEvaluatorsError&) {
            }
            continue;
        }
        AggregateOutcome outcome = aggregate_absolute_score(tiered);
        double average = weighted_sum / weight_total;
        check.expect(outcome.exact <= average + 1e-9, "aggregate exceeds weighted average");
        check.expect(outcome.exact <= critical_min + 1e-9, "aggregate exceeds a critical score");
        double expected = critical_min < 1e9 ? std::min(critical_min, average) : average;
        check.expect(std::abs(outcome.exact - expected) < 1e-9, "aggregate is not the gated minimum");
        if (!check.ok) return;
    }
}

// 3: the forbidden-edge scan agrees with a brute-force oracle, including the
// documented certificate-before-cancellation transition.
void criterion_forbidden_edges(Checker& check) {
    std::vector<ForbiddenEdge> doc_edges{
        {"send_certificate", "cancel_reservation", "refund must follow verification"}};
    EvaluatorResult documented = eval_forbidden_edges(
        {"get_user_details", "send_certificate", "cancel_reservation"}, doc_edges);
    check.expect(documented.score == 0.0, "documented bad transition not flagged");
    check.expect(documented.violations.size() == 1, "documented transition violation count");
    check.expect(eval_forbidden_edges({"cancel_reservation", "send_certificate"}, doc_edges)
                         .score == 100.0,
                 "reverse order wrongly flagged");

    std::mt19937 rng(7177);
    std::vector<std::string> names{"a", "b", "c", "d"};
    for (int round = 0; round < 1000; ++round) {
        std::vector<std::string> sequence(rng() % 12);
        for (auto& s : sequence) s = names[rng() % names.size()];
        std::vector<ForbiddenEdge> edges(1 + rng() % 4);
        for (auto& e : edges) e = {names[rng() % names.size()], names[rng() % names.size()], "r"};

        size_t expected = 0;
        for (size_t i = 0; i + 1 < sequence.size(); ++i)
            for (const auto& edge : edges)
                if (sequence[i] == edge.from && sequence[i + 1] == edge.to) ++expected;

        EvaluatorResult result = eval_forbidden_edges(sequence, edges);
        check.expect(result.included, "non-empty edge list must be included");
        check.expect(result.violations.size() == expected, "violation count disagrees with oracle");
        check.expect(result.score == (expected == 0 ? 100.0 : 0.0), "score disagrees with oracle");
        if (!check.ok) return;
    }
}

// 4: static argument validation agrees with an independent per-parameter oracle.
void criterion_argument_validation(Checker& check) {
    std::mt19937 rng(5511);
    for (int round = 0; round < 500; ++round) {
        ToolSchema tool;
        tool.name = "op";
        int param_count = 1 + static_cast<int>(rng() % 4);
        for (int p = 0; p < param_count; ++p) {
            ParamSpec spec;
            spec.name = "p" + std::to_string(p);
            switch (rng() % 3) {
                case 0: spec.type = ParamType::String; break;
                case 1: spec.type = ParamType::Integer; break;
                default: spec.type = ParamType::Boolean; break;
            }
            spec.required = rng() % 2;
            if (spec.type == ParamType::String && rng() % 3 == 0)
                spec.enum_values = std::vector<json>{"alpha", "beta"};
            if (spec.type == ParamType::Integer && rng() % 3 == 0) {
                spec.min_value = 0.0;
                spec.max_value = 9.0;
            }
            tool.parameters.push_back(std::move(spec));
        }

        auto good_value = [&](const ParamSpec& p) -> json {
            if (p.type == ParamType::String) return p.enum_values ? json("alpha") : json("ok");
            if (p.type == ParamType::Integer) return json(3);
            return json(true);
        };

        json args = json::object();
        size_t expected = 0;
        for (const auto& param : tool.parameters) {
            switch (rng() % 5) {
                case 0:  // omitted
                    if (param.required) ++expected;
                    break;
                case 1:
                    args[param.name] = good_value(param);
                    break;
                case 2:  // wrong type
                    args[param.name] = param.type == ParamType::String ? json(1) : json("x");
                    ++expected;
                    break;
                case 3:  // enum miss where an enum exists
                    if (param.enum_values) {
                        args[param.name] = "gamma";
                        ++expected;
                    } else {
                        args[param.name] = good_value(param);
                    }
                    break;
                default:  // bounds miss where bounds exist
                    if (param.min_value) {
                        args[param.name] = 99;
                        ++expected;
                    } else {
                        args[param.name] = good_value(param);
                    }
                    break;
            }
        }
        if (rng() % 3 == 0) {
            args["undeclared_extra"] = 1;
            ++expected;
        }

        NormalizedTrace trace;
        trace.trace_id = "t";
        trace.system_prompt = "sp";
        trace.tools = {tool};
        trace.messages = {{Role::Assistant, "", {{"c0", "op", args}}, std::nullopt}};
        if (rng() % 8 == 0) {
            trace.messages[0].tool_calls.push_back({"c1", "ghost", json::object()});
            ++expected;
        }

        auto violations = validate_arguments_static(
            trace, derive_argument_spec(trace.tools, trace.system_prompt));
        check.expect(violations.size() == expected, "violation count disagrees with oracle");
        if (!check.ok) return;
    }
}

// 5: the full pipeline is deterministic; fixture replays at parallelism 1 and
// 8 produce byte-identical artifacts, and the reference trace aggregates to 85.
void criterion_end_to_end_determinism(Checker& check) {
    fs::path input = temp_dir("e2e_in");
    fs::copy_file(test_support::fixture_dir() / "tau2_airline.json", input / "airline.json");
    fs::copy_file(test_support::fixture_dir() / "openai_messages.json", input / "weather.json");

    ClientConfig config;
    config.retry_base_delay_ms = 0;

    // Recording pass: capture every prompt/response pair keyed by digest.
    fs::path record_dir = temp_dir("e2e_fixtures");
    {
        auto scripted = test_support::scripted_from(
            test_support::load_fixture("airline_responses.json"));
        LlmClient recorder(TemplateStore::load(test_support::prompt_dir()),
                           std::make_shared<test_support::RecordingBackend>(scripted, record_dir),
                           config);
        BatchConfig batch;
        batch.out_dir = temp_dir("e2e_record_out");
        run_batch(input, batch, recorder);
    }

    auto replay = [&](int parallelism, const fs::path& out_dir) {
        LlmClient client(TemplateStore::load(test_support::prompt_dir()),
                         std::make_shared<FixtureBackend>(record_dir), config);
        BatchConfig batch;
        batch.out_dir = out_dir;
        batch.parallelism = parallelism;
        return run_batch(input, batch, client);
    };

    fs::path out1 = temp_dir("e2e_out1");
    fs::path out8 = temp_dir("e2e_out8");
    BatchResult serial = replay(1, out1);
    BatchResult parallel = replay(8, out8);

    check.expect(serial.failures.empty() && parallel.failures.empty(), "replay reported failures");
    check.expect(serial.reports.size() == 2 && parallel.reports.size() == 2,
                 "expected two audited traces");
    if (!check.ok) return;

    check.expect(serial.reports[0].trace_id == "airline_cancel_duplicates_001",
                 "unexpected report order");
    check.expect(serial.reports[0].final_score == 85.0, "reference trace does not score 85");

    int compared = 0;
    for (const auto& entry : fs::directory_iterator(out1)) {
        fs::path twin = out8 / entry.path().filename();
        check.expect(fs::exists(twin), "artifact missing in parallel run");
        if (!fs::exists(twin)) return;
        check.expect(test_support::read_file(entry.path()) == test_support::read_file(twin),
                     "artifact bytes differ between parallelism 1 and 8");
        ++compared;
    }
    check.expect(compared == 2, "expected two artifacts to compare");
}

// 6: importer outputs match the committed goldens byte for byte, and the
// normalized artifact round-trips.
void criterion_importer_goldens(Checker& check) {
    auto registry = ImporterRegistry::with_default_adapters();
    struct Case {
        const char* input;
        const char* golden;
        const char* fallback;
    };
    for (const Case& c : {Case{"tau2_airline.json", "tau2_airline.normalized.json", "fallback"},
                          Case{"openai_messages.json", "openai_messages.normalized.json",
                               "weather_lisbon"}}) {
        auto traces = registry.import_auto(test_support::load_fixture(c.input), c.fallback);
        check.expect(traces.size() == 1, std::string(c.input) + ": expected one trace");
        if (traces.size() != 1) return;
        std::string produced = traces[0].to_json().dump(2) + "\n";
        std::string golden =
            test_support::read_file(test_support::fixture_dir() / "golden" / c.golden);
        check.expect(!golden.empty(), std::string(c.golden) + " missing");
        check.expect(produced == golden, std::string(c.input) + ": bytes differ from golden");

        NormalizedTrace round_trip = NormalizedTrace::from_json(traces[0].to_json());
        check.expect(round_trip == traces[0], std::string(c.input) + ": round-trip changed trace");
        auto reimported = registry.import_auto(traces[0].to_json(), "x");
        check.expect(reimported.size() == 1 && reimported[0] == traces[0],
                     std::string(c.input) + ": normalized reimport changed trace");
    }
}

// 7: threshold analysis on a separable four-trace set finds every failure
// (recall 1.0, AUC 1.0) and a fully tied set yields AUC 0.5.
void criterion_failure_detection(Checker& check) {
    auto report_at = [](const std::string& id, double score, double reward) {
        std::vector<EvaluatorResult> results{result_of(EvaluatorId::OutputSpec, score),
                                             result_of(EvaluatorId::TransitionSpec, score)};
        TraceReport report =
            build_report(id, results, SpecSuite{}, json{{"outcome_reward", reward}});
        report.final_score = score;
        return report;
    };

    std::vector<TraceReport> separable{report_at("f1", 10, 0.0), report_at("f2", 20, 0.0),
                                       report_at("p1", 80, 1.0), report_at("p2", 90, 1.0)};
    ClassificationAnalysis analysis = threshold_analysis(separable, "final", 65.0);
    check.expect(analysis.true_positive == 2 && analysis.false_negative == 0,
                 "failures not all recalled");
    check.expect(analysis.false_positive == 0 && analysis.true_negative == 2,
                 "passes wrongly flagged");
    check.expect(analysis.recall_of_failures == 1.0, "recall is not 1.0");
    check.expect(analysis.auc_defined && std::abs(analysis.roc_auc - 1.0) < 1e-9,
                 "AUC is not 1.0");

    std::vector<TraceReport> tied{report_at("f1", 50, 0.0), report_at("f2", 50, 0.0),
                                  report_at("p1", 50, 1.0), report_at("p2", 50, 1.0)};
    ClassificationAnalysis tied_analysis = threshold_analysis(tied, "final", 65.0);
    check.expect(tied_analysis.auc_defined && std::abs(tied_analysis.roc_auc - 0.5) < 1e-9,
                 "tied AUC is not 0.5");
}

// 8: a trace without task metadata still audits: exactly five evaluators are
// included and the aggregate matches the hand computation.
void criterion_sparse_metadata(Checker& check) {
    NormalizedTrace trace = test_support::airline_trace();
    trace.metadata.task_description.reset();
    trace.metadata.init_state.reset();

    LlmClient client = test_support::airline_client();
    SpecSuite specs = extract_spec_suite(trace, client);
    EvaluationState state = run_suite(trace, specs, client);

    int included = 0;
    for (const auto& [id, result] : state.results) included += result.included;
    check.expect(state.results.size() == 7, "suite must always emit seven results");
    check.expect(included == 5, "expected exactly five included evaluators");
    check.expect(!state.results.at(EvaluatorId::PredictedPlan).included,
                 "plan must be skipped without a task description");
    check.expect(!state.results.at(EvaluatorId::PredictedFinalState).included,
                 "final state must be skipped without an initial state");

    std::vector<EvaluatorResult> results;
    for (EvaluatorId id : kEvaluatorOrder) results.push_back(state.results.at(id));
    AggregateOutcome outcome = aggregate_absolute_score(assign_tiers(results));
    // By hand: output 85*3, transition 100*2, forbidden 100*1, groundedness
    // 100*1, argument 100*2 => 855/9 = 95 average, gated by critical 85.
    check.expect(std::abs(855.0 / 9.0 - 95.0) < 1e-12, "hand-computed average is off");
    check.expect(outcome.exact == 85.0, "sparse-metadata aggregate is not 85");
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        std::function<void(Checker&)> run;
    };
    const std::vector<Criterion> criteria{
        {"worked example aggregates to 85.00", criterion_worked_example},
        {"aggregate is the gated minimum on 10000 random configurations", criterion_gate_bound},
        {"forbidden-edge scan matches the brute-force oracle", criterion_forbidden_edges},
        {"argument validation matches the per-parameter oracle", criterion_argument_validation},
        {"fixture replays are byte-identical across parallelism", criterion_end_to_end_determinism},
        {"importers reproduce the committed goldens", criterion_importer_goldens},
        {"threshold analysis separates failures from passes", criterion_failure_detection},
        {"sparse metadata yields five included evaluators", criterion_sparse_metadata},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Checker check;
        try {
            criteria[i].run(check);
        } catch (const std::exception& e) {
            check.ok = false;
            check.notes << "exception: " << e.what();
        }
        std::printf("%s criterion %zu: %s%s%s\n", check.ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].label, check.ok ? "" : " -- ",
                    check.ok ? "" : check.notes.str().c_str());
        if (!check.ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
