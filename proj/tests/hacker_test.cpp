#include "solvita/hacker.hpp"

#include "support/golden.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <random>

using namespace solvita;

namespace {

Verdict breaking(VerdictKind kind) {
    Verdict v;
    v.kind = kind;
    return v;
}

RoundVerdicts make_round(std::size_t all, std::size_t valid, std::vector<VerdictKind> breaks,
                         int compile_failures) {
    RoundVerdicts round;
    round.compile_failures = compile_failures;
    for (std::size_t i = 0; i < all; ++i) {
        round.all.push_back(breaking(VerdictKind::AC));
    }
    for (std::size_t i = 0; i < valid; ++i) {
        round.valid.push_back(breaking(VerdictKind::AC));
    }
    for (VerdictKind kind : breaks) {
        round.breaks.push_back(breaking(kind));
    }
    return round;
}

} // namespace

TEST_CASE("severity follows the per-verdict table") {
    CHECK(severity(VerdictKind::WA) == doctest::Approx(0.50));
    CHECK(severity(VerdictKind::TLE) == doctest::Approx(0.65));
    CHECK(severity(VerdictKind::MLE) == doctest::Approx(0.75));
    CHECK(severity(VerdictKind::RE) == doctest::Approx(0.85));
    CHECK(severity(VerdictKind::crash) == doctest::Approx(1.00));
    CHECK_THROWS_AS(severity(VerdictKind::AC), std::invalid_argument);
    CHECK_THROWS_AS(severity(VerdictKind::compile_fail), std::invalid_argument);
}

TEST_CASE("hack_reward composes the rate terms with the compile penalty") {
    SUBCASE("the worked example") {
        const RoundVerdicts round = make_round(
            10, 8, {VerdictKind::WA, VerdictKind::TLE, VerdictKind::WA, VerdictKind::RE}, 0);
        CHECK(hack_reward(round) == doctest::Approx(0.59125).epsilon(1e-12));
    }
    SUBCASE("a degenerate generation failure uses the fixed correction") {
        RoundVerdicts round;
        round.generation_failure = true;
        round.compile_failures = 2;
        CHECK(hack_reward(round) == doctest::Approx(-0.8).epsilon(1e-12));
    }
    SUBCASE("the compile penalty caps at 0.3") {
        RoundVerdicts round = make_round(4, 4, {}, 4);
        round.breaks = {breaking(VerdictKind::crash), breaking(VerdictKind::crash),
                        breaking(VerdictKind::crash), breaking(VerdictKind::crash)};
        CHECK(hack_reward(round) == doctest::Approx(0.70).epsilon(1e-12));
    }
    SUBCASE("an empty round without generation failure scores only the penalty") {
        RoundVerdicts round;
        round.compile_failures = 1;
        CHECK(hack_reward(round) == doctest::Approx(-0.1));
    }
    SUBCASE("rewards always land in [-1, 1] and degenerate rounds in [-0.9, -0.6]") {
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<int> count(0, 12);
        std::uniform_int_distribution<int> compile(0, 9);
        std::uniform_int_distribution<int> kind_pick(0, 4);
        const VerdictKind kinds[] = {VerdictKind::WA, VerdictKind::TLE, VerdictKind::MLE,
                                     VerdictKind::RE, VerdictKind::crash};
        for (int trial = 0; trial < 3000; ++trial) {
            const int all = count(rng);
            const int valid = std::min(all, count(rng));
            const int breaks = std::min(valid, count(rng));
            std::vector<VerdictKind> break_kinds;
            for (int i = 0; i < breaks; ++i) {
                break_kinds.push_back(kinds[kind_pick(rng)]);
            }
            RoundVerdicts round = make_round(static_cast<std::size_t>(all),
                                             static_cast<std::size_t>(valid), break_kinds,
                                             compile(rng));
            round.generation_failure = round.valid.empty() && (trial % 2 == 0);
            const double r = hack_reward(round);
            CHECK(r >= -1.0);
            CHECK(r <= 1.0);
            if (round.valid.empty() && round.generation_failure) {
                CHECK(r <= -0.6);
                CHECK(r >= -0.9);
            }
        }
    }
    SUBCASE("reward is monotone in the break count at fixed severity") {
        double previous = -2.0;
        for (std::size_t breaks = 1; breaks <= 6; ++breaks) {
            RoundVerdicts round = make_round(8, 6, {}, 1);
            for (std::size_t i = 0; i < breaks; ++i) {
                round.breaks.push_back(breaking(VerdictKind::WA));
            }
            const double r = hack_reward(round);
            CHECK(r >= previous);
            previous = r;
        }
    }
}

TEST_CASE("next_route follows the suggestion then the cascade") {
    VulnReport suggestion;
    suggestion.suggested_route = AttackRoute::antihash;

    SUBCASE("round 1 uses the suggested route") {
        CHECK(*next_route(suggestion, 1, {}) == AttackRoute::antihash);
    }
    SUBCASE("round 1 without a report is semantic") {
        CHECK(*next_route(std::nullopt, 1, {}) == AttackRoute::semantic);
    }
    SUBCASE("the cascade skips tried routes and never repeats") {
        std::vector<AttackRoute> tried;
        std::optional<VulnReport> report; // none
        for (int round = 1; round <= 3; ++round) {
            const auto route = next_route(report, round, tried);
            REQUIRE(route.has_value());
            CHECK(std::count(tried.begin(), tried.end(), *route) == 0);
            tried.push_back(*route);
        }
        CHECK(tried == std::vector<AttackRoute>{AttackRoute::semantic, AttackRoute::stress,
                                                AttackRoute::antihash});
        CHECK_FALSE(next_route(report, 4, tried).has_value());
    }
    SUBCASE("a suggested first route shifts the cascade remainder") {
        std::vector<AttackRoute> tried = {AttackRoute::antihash};
        CHECK(*next_route(suggestion, 2, tried) == AttackRoute::semantic);
        tried.push_back(AttackRoute::semantic);
        CHECK(*next_route(suggestion, 3, tried) == AttackRoute::stress);
    }
    SUBCASE("the round budget bounds the cascade") {
        CHECK_FALSE(next_route(std::nullopt, 4, {}).has_value());
        CHECK_THROWS_AS(next_route(std::nullopt, 0, {}), std::invalid_argument);
    }
}

TEST_CASE("vulnerability reports parse strictly against the analyst schema") {
    const std::string good = R"({"bug_class":"overflow","confidence":"high",
        "evidence":["comb(100,50) exceeds 2^63"],"suggested_route":"anti_hash",
        "input_hypothesis":["large_n"]})";
    const auto report = VulnReport::parse(good);
    REQUIRE(report.has_value());
    CHECK(report->bug_class == "overflow");
    CHECK(*report->suggested_route == AttackRoute::antihash);
    CHECK_FALSE(report->weak());

    CHECK_FALSE(VulnReport::parse("not json").has_value());
    CHECK_FALSE(VulnReport::parse(R"({"bug_class":"nonsense","confidence":"high"})").has_value());
    CHECK_FALSE(VulnReport::parse(R"({"bug_class":"tle","confidence":"sure"})").has_value());

    const auto weak = VulnReport::parse(R"({"bug_class":"unknown","confidence":"low"})");
    REQUIRE(weak.has_value());
    CHECK(weak->weak());
}

TEST_CASE("the event bus delivers breaks exactly once per namespace") {
    EventBus bus;
    std::map<MemoryNamespace, int> writes;
    for (MemoryNamespace ns : EventBus::delivery_order()) {
        bus.subscribe(ns, [&writes](MemoryNamespace target, const BreakEvent&) {
            ++writes[target];
        });
    }
    BreakEvent event{"p1", AttackRoute::semantic, "1 2\n", VerdictKind::WA};

    SUBCASE("one break fans out to the four role namespaces") {
        CHECK(bus.emit_break(event) == 4);
        CHECK(writes.size() == 4);
        for (const auto& [ns, count] : writes) {
            CHECK(count == 1);
        }
    }
    SUBCASE("duplicate (problem, input) pairs are deduplicated") {
        CHECK(bus.emit_break(event) == 4);
        CHECK(bus.emit_break(event) == 0);
        BreakEvent other = event;
        other.breaking_input = "3 4\n";
        CHECK(bus.emit_break(other) == 4);
    }
    SUBCASE("a closed bus buffers until flush") {
        bus.close();
        CHECK(bus.emit_break(event) == 0);
        CHECK(bus.buffered() == 1);
        CHECK(bus.flush() == 4);
        CHECK(bus.buffered() == 0);
        for (const auto& [ns, count] : writes) {
            CHECK(count == 1);
        }
    }
}

TEST_CASE("the analyst loop runs tools, nudges weak reports, and repairs JSON") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    HackerAgent::Config config;
    config.toolchain.command_template = "g++ -std=c++17 -O0 -o {output} {source}";
    const ProblemRecord problem = test::golden_problem();
    const PromptLibrary prompts = PromptLibrary::defaults();

    auto scripted_llm = [&](ScriptedBackend& backend) {
        return [&backend, &prompts](const std::string& name,
                                    const std::map<std::string, std::string>& bindings) {
            return backend.complete(name, render_prompt(prompts.get(name), bindings), {});
        };
    };

    SUBCASE("a tool call feeds its output back into the next analyst turn") {
        ScriptedBackend backend(
            {{"code_analyst.main",
              nlohmann::json({{"tool", "run_python"},
                              {"parameters", {{"script_code", "print(6 * 7)"}}}})
                  .dump()},
             {"code_analyst.main", test::analyst_report_step("42 confirmed").response}});
        HackerAgent agent(sandbox, config);
        const VulnReport& report =
            agent.analyze(problem, test::correct_solution(), scripted_llm(backend));
        CHECK(report.bug_class == "logic_branch");
        CHECK(backend.remaining() == 0);
        CHECK(backend.transcript().back().prompt.find("42") != std::string::npos);
    }
    SUBCASE("weak reports trigger the forced-tool nudge once") {
        ScriptedBackend backend(
            {{"code_analyst.main",
              nlohmann::json({{"bug_class", "unknown"}, {"confidence", "low"}}).dump()},
             {"code_analyst.force_tool",
              nlohmann::json({{"tool", "run_python"}, {"parameters", {{"script_code", "print(1)"}}}})
                  .dump()},
             {"code_analyst.main", test::analyst_report_step("now supported").response}});
        HackerAgent agent(sandbox, config);
        const VulnReport& report =
            agent.analyze(problem, test::correct_solution(), scripted_llm(backend));
        CHECK_FALSE(report.weak());
        CHECK(backend.remaining() == 0);
    }
    SUBCASE("invalid JSON gets one repair attempt") {
        ScriptedBackend backend(
            {{"code_analyst.main", "```json\nnot quite\n```"},
             {"code_analyst.json_repair", test::analyst_report_step("repaired").response}});
        HackerAgent agent(sandbox, config);
        const VulnReport& report =
            agent.analyze(problem, test::correct_solution(), scripted_llm(backend));
        CHECK(report.bug_class == "logic_branch");
    }
    SUBCASE("the tool budget forces a fallback report") {
        std::vector<ScenarioStep> steps;
        const std::string tool_call =
            nlohmann::json({{"tool", "run_python"}, {"parameters", {{"script_code", "print(1)"}}}})
                .dump();
        for (int i = 0; i < 5; ++i) {
            steps.push_back({"code_analyst.main", tool_call});
        }
        ScriptedBackend backend(steps);
        HackerAgent agent(sandbox, config);
        const VulnReport& report =
            agent.analyze(problem, test::correct_solution(), scripted_llm(backend));
        CHECK(report.bug_class == "unknown");
        CHECK(report.confidence == "low");
    }
}

TEST_CASE("a full attack round finds the planted break") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    const ToolchainConfig toolchain{"g++ -std=c++17 -O0 -o {output} {source}", ".cpp", 60.0};
    const ProblemRecord problem = test::golden_problem();
    const PromptLibrary prompts = PromptLibrary::defaults();

    CompileResult candidate = sandbox.compile(test::sneaky_solution(), toolchain);
    REQUIRE(candidate.ok());
    CompileResult validator = sandbox.compile(test::validator_source(), toolchain);
    REQUIRE(validator.ok());
    SupervisionArtifact artifact;
    artifact.solver_src = test::reference_solver_source();
    JudgeContext judge = JudgeContext::from_artifact(artifact, sandbox, toolchain);

    HackerAgent::Config config;
    config.toolchain = toolchain;
    config.inputs_per_round = 2;
    HackerAgent agent(sandbox, config);

    ScriptedBackend backend({test::analyst_report_step("branch on the 999999 pair"),
                             {"hacker.semantic.generator", test::emitter_of("999999 999999")}});
    const auto llm = [&](const std::string& name,
                         const std::map<std::string, std::string>& bindings) {
        return backend.complete(name, render_prompt(prompts.get(name), bindings), {});
    };

    agent.analyze(problem, test::sneaky_solution(), llm);
    const HackerAgent::RoundOutcome outcome =
        agent.run_round(problem, *candidate.binary, *validator.binary, judge, llm);
    CHECK_FALSE(outcome.exhausted);
    CHECK(outcome.route == AttackRoute::semantic);
    REQUIRE_FALSE(outcome.breaks.empty());
    CHECK(outcome.breaks.front().second.kind == VerdictKind::WA);
    CHECK(outcome.verdicts.valid.size() == outcome.verdicts.all.size());
    CHECK(outcome.reward > 0.5); // full valid rate, full break rate, WA severity
    CHECK(agent.rounds_run() == 1);
}

TEST_CASE("a generator repaired by checklist and patch still attacks") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    const ToolchainConfig toolchain{"g++ -std=c++17 -O0 -o {output} {source}", ".cpp", 60.0};
    const ProblemRecord problem = test::golden_problem();
    const PromptLibrary prompts = PromptLibrary::defaults();

    CompileResult candidate = sandbox.compile(test::correct_solution(), toolchain);
    REQUIRE(candidate.ok());
    SupervisionArtifact artifact;
    artifact.solver_src = test::reference_solver_source();
    JudgeContext judge = JudgeContext::from_artifact(artifact, sandbox, toolchain);

    // First generator draft is missing a semicolon; the scripted checklist
    // and patch repair it into a working emitter.
    const std::string broken = "#include <cstdio>\nint main() { std::printf(\"1 2\\n\") }\n";
    const std::string patch_text =
        "<<<<<<< SEARCH\n"
        "int main() { std::printf(\"1 2\\n\") }\n"
        "=======\n"
        "int main() { std::printf(\"1 2\\n\"); return 0; }\n"
        ">>>>>>> REPLACE\n";

    HackerAgent::Config config;
    config.toolchain = toolchain;
    config.inputs_per_round = 1;
    HackerAgent agent(sandbox, config);

    ScriptedBackend backend(
        {test::analyst_report_step("generator drill"),
         {"hacker.semantic.generator", broken},
         {"hacker.semantic.checklist",
          nlohmann::json({{"must_fix", {"missing semicolon"}},
                          {"do_not_regress", {"prints one valid case"}},
                          {"attack_goal", {"keep the adversarial pair"}}})
              .dump()},
         {"hacker.semantic.patch", patch_text}});
    const auto llm = [&](const std::string& name,
                         const std::map<std::string, std::string>& bindings) {
        return backend.complete(name, render_prompt(prompts.get(name), bindings), {});
    };

    agent.analyze(problem, test::correct_solution(), llm);
    const HackerAgent::RoundOutcome outcome =
        agent.run_round(problem, *candidate.binary, std::nullopt, judge, llm);
    CHECK(outcome.verdicts.compile_failures == 1);
    CHECK(outcome.verdicts.all.size() == 1);
    CHECK(outcome.breaks.empty()); // candidate is correct; the round just runs
    CHECK(backend.remaining() == 0);
}
