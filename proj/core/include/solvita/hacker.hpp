#pragma once

#include "solvita/event_bus.hpp"
#include "solvita/judge.hpp"
#include "solvita/oracle.hpp"
#include "solvita/problem.hpp"
#include "solvita/sandbox.hpp"

#include <optional>
#include <string>
#include <vector>

namespace solvita {

// Round-reward component weights and penalties.
inline constexpr double kHackValidWeight = 0.20;
inline constexpr double kHackBreakWeight = 0.55;
inline constexpr double kHackSeverityWeight = 0.25;
inline constexpr double kCompilePenaltyPerFailure = 0.1;
inline constexpr double kCompilePenaltyCap = 0.3;
inline constexpr double kDegenerateRoundBase = -0.6;

/// Per-verdict severity weight in [0, 1]. Only break verdicts have one; AC
/// and compile_fail throw std::invalid_argument.
double severity(VerdictKind kind);
inline double severity(const Verdict& v) { return severity(v.kind); }

// Verdict sets for one adversarial round: breaks are the validator-accepted
// inputs that exposed a failure, so breaks is a subset of valid is a subset
// of all.
struct RoundVerdicts {
    std::vector<Verdict> all;
    std::vector<Verdict> valid;
    std::vector<Verdict> breaks;
    int compile_failures = 0;
    // Zero valid verdicts caused by the generator itself (failed compile,
    // nonzero exit, or empty output) rather than by validator rejections.
    bool generation_failure = false;
};

/// Round reward: weighted valid/break/severity rates minus the capped
/// compile penalty, clipped to [-1, 1]. Degenerate rounds (generation
/// failure with no valid verdict) score -0.6 - min(0.3, 0.1 c) instead.
double hack_reward(const RoundVerdicts& round);

// Structured code-analyst output; field names are the wire schema.
struct VulnReport {
    std::string bug_class = "unknown"; // overflow|hash_collision|index_oob|tle|logic_branch|unknown
    std::string confidence = "low";    // high|medium|low
    std::vector<std::string> evidence;
    std::optional<AttackRoute> suggested_route;
    std::vector<std::string> input_hypothesis;

    bool weak() const { return confidence == "low" && evidence.empty(); }
    nlohmann::json to_json() const;
    static std::optional<VulnReport> parse(const std::string& text);
};

/// Route for the given 1-based round: round 1 follows the analyst's
/// suggestion (semantic when absent), later rounds advance through the
/// semantic -> stress -> antihash cascade skipping tried routes. Returns
/// nullopt once the round budget or the route set is exhausted.
std::optional<AttackRoute> next_route(const std::optional<VulnReport>& report, int round_index,
                                      const std::vector<AttackRoute>& tried,
                                      int max_rounds = 3);

// Adversarial loop for one candidate: analyst report, cascading routed
// attack rounds, reward scoring. Break events are returned to the caller for
// bus emission.
class HackerAgent {
public:
    struct Config {
        int max_rounds = 3;
        int inputs_per_round = 5;
        int max_tool_rounds = 4;
        int max_generator_repairs = 1;
        ToolchainConfig toolchain;
        ExecutionLimits limits;
        ExecutionLimits tool_limits{5.0, 10.0, 512ull * 1024 * 1024, 1ull * 1024 * 1024};
    };

    explicit HackerAgent(const Sandbox& sandbox);
    HackerAgent(const Sandbox& sandbox, Config config);

    /// Runs the code-analyst controller: tool calls (run_python / run_cpp)
    /// up to the tool budget, one forced-tool nudge for weak reports, one
    /// JSON-repair retry, then the final report.
    const VulnReport& analyze(const ProblemRecord& problem, const std::string& candidate_source,
                              const LlmCall& llm);

    struct RoundOutcome {
        bool exhausted = false;
        AttackRoute route = AttackRoute::semantic;
        RoundVerdicts verdicts;
        double reward = 0.0;
        std::vector<std::pair<std::string, Verdict>> breaks; // breaking input -> verdict
        std::string generator_source;
    };

    /// Executes the next cascade round against the candidate. `validator`
    /// may be empty (inputs then count as valid unfiltered).
    RoundOutcome run_round(const ProblemRecord& problem, const CompiledBinary& candidate,
                           const std::optional<CompiledBinary>& validator,
                           const JudgeContext& judge, const LlmCall& llm);

    int rounds_run() const { return rounds_run_; }
    const std::vector<AttackRoute>& routes_tried() const { return routes_tried_; }
    bool has_report() const { return report_.has_value(); }

private:
    std::string run_tool(const nlohmann::json& call);

    const Sandbox& sandbox_;
    Config config_;
    std::optional<VulnReport> report_;
    std::vector<AttackRoute> routes_tried_;
    int rounds_run_ = 0;
};

} // namespace solvita
