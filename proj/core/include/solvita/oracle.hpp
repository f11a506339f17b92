#pragma once

#include "solvita/feature_key.hpp"
#include "solvita/judge.hpp"
#include "solvita/problem.hpp"
#include "solvita/sandbox.hpp"
#include "solvita/supervision.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace solvita {

enum class JudgeAgreement { agree, partial, contradict, none };

std::string to_string(JudgeAgreement verdict);
JudgeAgreement judge_agreement_from_string(const std::string& text);

// Reference-solver strategy family with its own bandit scores.
struct SolverFamily {
    std::string family_id;
    std::string description;
    double bias = 0.0;
    std::map<FeatureKey, double> weights;
    double success_rate = 0.0;
    std::uint64_t uses = 0;

    nlohmann::json to_json() const;
    static SolverFamily from_json(const nlohmann::json& j);
};

/// Family selection score: bias plus the summed weights on active keys.
/// Unlike item scoring there is no tag bonus.
double family_score(const SolverFamily& family, const BanditContext& ctx);

class FamilyCatalog {
public:
    void add(SolverFamily family);
    bool empty() const { return families_.empty(); }
    std::size_t size() const { return families_.size(); }
    const SolverFamily& get(const std::string& family_id) const;
    std::vector<std::string> ids() const;

    /// Argmax family under the selection score; ties break toward the
    /// lexicographically smallest family_id. Throws on an empty catalog.
    const SolverFamily& select(const BanditContext& ctx) const;

    /// Family ids ordered by descending score (the retry ladder).
    std::vector<std::string> ranked(const BanditContext& ctx) const;

    /// Residual bandit update on the selected family; `succeeded` feeds the
    /// historical success rate.
    SolverFamily apply_reward(const std::string& family_id, double reward,
                              const BanditContext& ctx, bool succeeded);

    void save(const std::filesystem::path& path) const;
    static FamilyCatalog load(const std::filesystem::path& path);
    static FamilyCatalog defaults();

private:
    std::map<std::string, SolverFamily> families_;
};

struct OracleConfig {
    int n_target = 20;
    double tau = 0.9;
    double partial_credit = 0.5; // slope of the partial-credit reward in rho
    int max_family_attempts = 3;
    ToolchainConfig toolchain;
    ExecutionLimits limits;
};

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Builds certified supervision: compiles the generated programs, self-checks
// the reference solver on the public samples, certifies generated inputs via
// the judge priority chain, and scores the artifact.
class Oracle {
public:
    Oracle(const Sandbox& sandbox, OracleConfig config = {});

    const OracleConfig& config() const { return config_; }

    /// Runs certification stages 2 and 3 on the artifact in place: public
    /// sample reproduction, then n_target generator runs with seeds
    /// 1..n_target, validation, and judge-chain certification. Returns the
    /// certification ratio.
    double certify(SupervisionArtifact& artifact, const std::vector<TestPair>& public_tests) const;

    /// Acceptance gate: nonempty inputs and outputs, ratio at the threshold,
    /// and checker evidence on multi-answer routes.
    static bool accept_gate(const SupervisionArtifact& artifact, double tau);

    /// Oracle reward: failure penalties dominate, full certification pays the
    /// judge-verdict bonus, anything in between earns partial credit
    /// proportional to the ratio. Throws when rho is 1 but no external judge
    /// verdict exists.
    static double reward(double rho, JudgeAgreement verdict, OracleFailure failure,
                         double partial_credit = 0.5);

    /// Stage-conditioned reference-solver guidance for attempt 1 / 2 / 3+.
    static std::string stage_guidance(int attempt);

private:
    const Sandbox& sandbox_;
    OracleConfig config_;
};

// One LLM step: prompt template name + bindings in, completion out.
using LlmCall =
    std::function<std::string(const std::string&, const std::map<std::string, std::string>&)>;

struct OracleBuildResult {
    struct AttemptLog {
        std::string family_id;
        double cert_ratio = 0.0;
        double reward = 0.0;
        bool reward_applied = false;
        bool accepted = false;
        OracleFailure failure = OracleFailure::none;
    };

    SupervisionArtifact artifact;
    double reward = 0.0;
    bool reward_applied = false;
    int attempts = 0;
    std::vector<std::string> families_tried;
    std::vector<AttemptLog> attempt_log;
};

// Drives the four generation sub-prompts through the LLM port, certifies, and
// retries with the next-best family (at most max_family_attempts) until the
// gate accepts. Rejected artifacts are discarded, never returned as accepted.
class OracleAgent {
public:
    OracleAgent(Oracle& oracle, FamilyCatalog& catalog);

    OracleBuildResult build(const ProblemRecord& problem, const BanditContext& ctx,
                            const LlmCall& llm,
                            const std::function<JudgeAgreement()>& external_judge);

private:
    Oracle& oracle_;
    FamilyCatalog& catalog_;
};

} // namespace solvita
