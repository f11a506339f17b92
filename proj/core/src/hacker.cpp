#include "solvita/hacker.hpp"

#include "solvita/patch_engine.hpp"

#include <algorithm>
#include <cmath>

namespace solvita {

double severity(VerdictKind kind) {
    switch (kind) {
    case VerdictKind::WA: return 0.50;
    case VerdictKind::TLE: return 0.65;
    case VerdictKind::MLE: return 0.75;
    case VerdictKind::RE: return 0.85;
    case VerdictKind::crash: return 1.00;
    case VerdictKind::AC:
    case VerdictKind::compile_fail:
        break;
    }
    throw std::invalid_argument("severity is defined for break verdicts only, got " +
                                to_string(kind));
}

double hack_reward(const RoundVerdicts& round) {
    const double penalty =
        std::min(kCompilePenaltyCap,
                 kCompilePenaltyPerFailure * static_cast<double>(round.compile_failures));
    if (round.valid.empty() && round.generation_failure) {
        // Degenerate round: fixed baseline keeps the route signal nonzero.
        return kDegenerateRoundBase - penalty;
    }
    const double g_valid =
        round.all.empty() ? 0.0
                          : static_cast<double>(round.valid.size()) /
                                static_cast<double>(round.all.size());
    const double g_break = static_cast<double>(round.breaks.size()) /
                           std::max<double>(static_cast<double>(round.valid.size()), 1.0);
    double g_sev = 0.0;
    if (!round.breaks.empty()) {
        for (const Verdict& v : round.breaks) {
            g_sev += severity(v);
        }
        g_sev /= static_cast<double>(round.breaks.size());
    }
    const double r = kHackValidWeight * g_valid + kHackBreakWeight * g_break +
                     kHackSeverityWeight * g_sev - penalty;
    return std::clamp(r, -1.0, 1.0);
}

nlohmann::json VulnReport::to_json() const {
    nlohmann::json j = {
        {"bug_class", bug_class},
        {"confidence", confidence},
        {"evidence", evidence},
        {"input_hypothesis", input_hypothesis},
    };
    if (suggested_route.has_value()) {
        j["suggested_route"] =
            *suggested_route == AttackRoute::antihash ? "anti_hash" : to_string(*suggested_route);
    }
    return j;
}

std::optional<VulnReport> VulnReport::parse(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    if (!j.is_object() || !j.contains("bug_class") || !j.contains("confidence")) {
        return std::nullopt;
    }
    static const std::set<std::string> kBugClasses = {"overflow",  "hash_collision", "index_oob",
                                                      "tle",       "logic_branch",   "unknown"};
    static const std::set<std::string> kConfidences = {"high", "medium", "low"};
    VulnReport report;
    report.bug_class = j.at("bug_class").get<std::string>();
    report.confidence = j.at("confidence").get<std::string>();
    if (kBugClasses.count(report.bug_class) == 0 || kConfidences.count(report.confidence) == 0) {
        return std::nullopt;
    }
    if (j.contains("evidence")) {
        report.evidence = j.at("evidence").get<std::vector<std::string>>();
    }
    if (j.contains("input_hypothesis")) {
        report.input_hypothesis = j.at("input_hypothesis").get<std::vector<std::string>>();
    }
    if (j.contains("suggested_route") && j.at("suggested_route").is_string()) {
        try {
            report.suggested_route =
                attack_route_from_string(j.at("suggested_route").get<std::string>());
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    }
    return report;
}

std::optional<AttackRoute> next_route(const std::optional<VulnReport>& report, int round_index,
                                      const std::vector<AttackRoute>& tried, int max_rounds) {
    if (round_index < 1) {
        throw std::invalid_argument("round_index is 1-based");
    }
    if (round_index > max_rounds) {
        return std::nullopt;
    }
    auto was_tried = [&](AttackRoute route) {
        return std::find(tried.begin(), tried.end(), route) != tried.end();
    };
    if (round_index == 1 && tried.empty()) {
        if (report.has_value() && report->suggested_route.has_value()) {
            return report->suggested_route;
        }
        return AttackRoute::semantic;
    }
    // Cascade order, skipping routes already attempted for this candidate.
    for (AttackRoute route : {AttackRoute::semantic, AttackRoute::stress, AttackRoute::antihash}) {
        if (!was_tried(route)) {
            return route;
        }
    }
    return std::nullopt;
}

HackerAgent::HackerAgent(const Sandbox& sandbox) : HackerAgent(sandbox, Config()) {}

HackerAgent::HackerAgent(const Sandbox& sandbox, Config config)
    : sandbox_(sandbox), config_(std::move(config)) {}

std::string HackerAgent::run_tool(const nlohmann::json& call) {
    const std::string tool = call.at("tool").get<std::string>();
    const nlohmann::json params = call.value("parameters", nlohmann::json::object());
    try {
        if (tool == "run_python") {
            const std::string script = params.at("script_code").get<std::string>();
            RawOutcome outcome =
                sandbox_.run_process({"python3", "-c", script}, "", config_.tool_limits);
            return "run_python exit=" + std::to_string(outcome.exit_status) +
                   " stdout=" + outcome.stdout_bytes + " stderr=" + outcome.stderr_bytes;
        }
        if (tool == "run_cpp") {
            const std::string code = params.at("cpp_code").get<std::string>();
            CompileResult compiled = sandbox_.compile(code, config_.toolchain);
            if (!compiled.ok()) {
                return "run_cpp compile failed: " + compiled.failure->diagnostic;
            }
            RawOutcome outcome = sandbox_.execute(*compiled.binary, "", config_.tool_limits);
            return "run_cpp exit=" + std::to_string(outcome.exit_status) +
                   " stdout=" + outcome.stdout_bytes + " stderr=" + outcome.stderr_bytes;
        }
    } catch (const std::exception& e) {
        return std::string("tool failed: ") + e.what();
    }
    return "unknown tool: " + tool;
}

const VulnReport& HackerAgent::analyze(const ProblemRecord& problem,
                                       const std::string& candidate_source, const LlmCall& llm) {
    if (report_.has_value()) {
        return *report_;
    }

    std::string history;
    int tool_rounds = 0;
    bool forced_once = false;
    bool repaired_once = false;

    auto fallback = [] {
        VulnReport report;
        report.bug_class = "unknown";
        report.confidence = "low";
        return report;
    };

    while (true) {
        std::map<std::string, std::string> bindings = {
            {"PROBLEM_DESC", problem.statement},
            {"CONSTRAINTS_JSON", problem.constraints.dump()},
            {"TARGET_CODE", candidate_source},
            {"HISTORY_TEXT", history.empty() ? "(none)" : history},
            {"ADVICE_SECTION", ""},
        };
        std::string response = llm("code_analyst.main", bindings);

        nlohmann::json parsed;
        bool valid_json = true;
        try {
            parsed = nlohmann::json::parse(response);
        } catch (const nlohmann::json::exception&) {
            valid_json = false;
        }
        if (!valid_json && !repaired_once) {
            repaired_once = true;
            response = llm("code_analyst.json_repair", {{"PREVIOUS_RESPONSE", response}});
            try {
                parsed = nlohmann::json::parse(response);
                valid_json = true;
            } catch (const nlohmann::json::exception&) {
                valid_json = false;
            }
        }
        if (!valid_json) {
            report_ = fallback();
            return *report_;
        }

        if (parsed.is_object() && parsed.contains("tool")) {
            if (tool_rounds >= config_.max_tool_rounds) {
                // Tool budget spent; force the analysis to conclude.
                report_ = fallback();
                return *report_;
            }
            ++tool_rounds;
            history += "tool call " + std::to_string(tool_rounds) + ": " + run_tool(parsed) + "\n";
            continue;
        }

        std::optional<VulnReport> report = VulnReport::parse(parsed.dump());
        if (!report.has_value()) {
            report_ = fallback();
            return *report_;
        }
        if (report->weak() && !forced_once && tool_rounds < config_.max_tool_rounds) {
            forced_once = true;
            const std::string tool_response =
                llm("code_analyst.force_tool", {{"TARGET_CODE", candidate_source},
                                                {"WEAK_REPORT_JSON", report->to_json().dump()},
                                                {"HISTORY_TEXT", history.empty() ? "(none)" : history}});
            try {
                const nlohmann::json tool_call = nlohmann::json::parse(tool_response);
                if (tool_call.is_object() && tool_call.contains("tool")) {
                    ++tool_rounds;
                    history += "forced tool: " + run_tool(tool_call) + "\n";
                    continue;
                }
            } catch (const nlohmann::json::exception&) {
                // The nudge failed; accept the weak report as-is.
            }
        }
        report_ = std::move(*report);
        return *report_;
    }
}

HackerAgent::RoundOutcome HackerAgent::run_round(const ProblemRecord& problem,
                                                 const CompiledBinary& candidate,
                                                 const std::optional<CompiledBinary>& validator,
                                                 const JudgeContext& judge, const LlmCall& llm) {
    RoundOutcome outcome;
    const std::optional<AttackRoute> route =
        next_route(report_, rounds_run_ + 1, routes_tried_, config_.max_rounds);
    if (!route.has_value()) {
        outcome.exhausted = true;
        return outcome;
    }
    outcome.route = *route;
    routes_tried_.push_back(*route);
    ++rounds_run_;

    const std::string route_name = to_string(*route);
    const std::string report_json =
        report_.has_value() ? report_->to_json().dump() : nlohmann::json(nullptr).dump();

    std::map<std::string, std::string> bindings = {
        {"PROBLEM_DESC", problem.statement},
        {"CONSTRAINTS_TEXT", problem.constraints.dump()},
        {"REPORT_JSON", report_json},
    };
    std::string generator_src = llm("hacker." + route_name + ".generator", bindings);
    outcome.generator_source = generator_src;

    auto generate_inputs = [&](const CompiledBinary& generator, bool& produced_any) {
        std::vector<std::string> inputs;
        for (int i = 1; i <= config_.inputs_per_round; ++i) {
            RawOutcome run =
                sandbox_.execute(generator, {std::to_string(i)}, "", config_.limits);
            if (!run.ran_clean() || run.stdout_bytes.empty()) {
                continue;
            }
            produced_any = true;
            inputs.push_back(run.stdout_bytes);
        }
        return inputs;
    };

    CompileResult compiled = sandbox_.compile(generator_src, config_.toolchain);
    bool produced_any = false;
    std::vector<std::string> inputs;
    std::string failure_kind;
    std::string failure_reason;

    if (!compiled.ok()) {
        ++outcome.verdicts.compile_failures;
        failure_kind = "compile_failed";
        failure_reason = compiled.failure->diagnostic;
    } else {
        inputs = generate_inputs(*compiled.binary, produced_any);
        if (inputs.empty()) {
            failure_kind = "empty_output";
            failure_reason = "generator produced no output on any run";
        }
    }

    // One checklist + patch repair attempt on a failed generation.
    for (int repair = 0; repair < config_.max_generator_repairs && !failure_kind.empty();
         ++repair) {
        std::map<std::string, std::string> checklist_bindings = {
            {"PROBLEM_DESC", problem.statement},
            {"CONSTRAINTS_TEXT", problem.constraints.dump()},
            {"FAILURE_KIND", failure_kind},
            {"FAILURE_REASON", failure_reason},
            {"LAST_GENERATOR_CODE", generator_src},
            {"REPORT_JSON", report_json},
        };
        const std::string checklist = llm("hacker." + route_name + ".checklist",
                                          checklist_bindings);
        std::map<std::string, std::string> patch_bindings = checklist_bindings;
        patch_bindings["CHECKLIST_JSON"] = checklist;
        const std::string patch_text = llm("hacker." + route_name + ".patch", patch_bindings);
        try {
            std::vector<EditBlock> blocks = parse_patch(patch_text);
            generator_src = apply_patch(generator_src, blocks);
        } catch (const std::exception&) {
            break; // unusable patch; the round stays failed
        }
        outcome.generator_source = generator_src;
        compiled = sandbox_.compile(generator_src, config_.toolchain);
        if (!compiled.ok()) {
            ++outcome.verdicts.compile_failures;
            failure_kind = "compile_failed";
            failure_reason = compiled.failure->diagnostic;
            continue;
        }
        failure_kind.clear();
        inputs = generate_inputs(*compiled.binary, produced_any);
        if (inputs.empty()) {
            failure_kind = "empty_output";
            failure_reason = "generator produced no output on any run";
        }
    }

    for (const std::string& input : inputs) {
        bool is_valid = true;
        if (validator.has_value()) {
            RawOutcome validated = sandbox_.execute(*validator, input, config_.limits);
            is_valid = validated.ran_clean();
        }
        if (!is_valid) {
            // Invalid inputs still produce an execution record but can never
            // count as breaks.
            RawOutcome run = sandbox_.execute(candidate, input, config_.limits);
            outcome.verdicts.all.push_back(classify_outcome(run));
            continue;
        }
        Verdict verdict;
        try {
            verdict = resolve_judgement(input, candidate, judge, sandbox_, config_.limits);
        } catch (const JudgeError&) {
            RawOutcome run = sandbox_.execute(candidate, input, config_.limits);
            verdict = classify_outcome(run);
            if (verdict.kind == VerdictKind::AC) {
                // Unjudgeable clean run: cannot prove a break.
                outcome.verdicts.all.push_back(verdict);
                outcome.verdicts.valid.push_back(verdict);
                continue;
            }
        }
        outcome.verdicts.all.push_back(verdict);
        outcome.verdicts.valid.push_back(verdict);
        if (verdict.kind != VerdictKind::AC) {
            outcome.verdicts.breaks.push_back(verdict);
            outcome.breaks.emplace_back(input, verdict);
        }
    }

    outcome.verdicts.generation_failure =
        outcome.verdicts.valid.empty() && (!produced_any || !compiled.ok());
    outcome.reward = hack_reward(outcome.verdicts);
    return outcome;
}

} // namespace solvita
