#pragma once

#include "solvita/embedding.hpp"
#include "solvita/episode.hpp"
#include "solvita/event_bus.hpp"
#include "solvita/hacker.hpp"
#include "solvita/judge.hpp"
#include "solvita/llm_port.hpp"
#include "solvita/memory_store.hpp"
#include "solvita/oracle.hpp"
#include "solvita/patch_engine.hpp"
#include "solvita/problem.hpp"
#include "solvita/prompt.hpp"
#include "solvita/qms_graph.hpp"
#include "solvita/sandbox.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>

namespace solvita {

enum class Phase {
    PLAN,
    ORACLE_BUILD,
    SOLVE_DRAFT,
    SELF_VALIDATE,
    PATCH_DECISION,
    SOLVE_PATCH,
    SOLVE_REGEN,
    HACK_ROUND,
    FINALIZE
};

std::string to_string(Phase phase);

class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Budgets {
    int max_solver_iterations = 8;
    int max_hack_rounds = 3;
    int max_family_attempts = 3;
};

// The per-problem control loop as a pure state machine. Counters never pass
// their budgets and transitions follow the declared graph only; illegal
// events throw StateError.
class PipelineStateMachine {
public:
    explicit PipelineStateMachine(Budgets budgets = {});

    Phase phase() const { return phase_; }
    int solver_iterations() const { return solver_iterations_; }
    int hack_rounds() const { return hack_rounds_; }
    int oracle_attempts() const { return oracle_attempts_; }
    const std::string& last_failure() const { return last_failure_; }
    bool finished() const { return phase_ == Phase::FINALIZE; }
    bool succeeded() const { return finished() && failure_free_; }
    const Budgets& budgets() const { return budgets_; }

    void plan_done();
    void oracle_result(bool accepted);
    void draft_done();
    void validation_result(bool all_pass, const std::string& failure_kind = "");
    void decision(bool patch_mode);
    void patch_result(bool gate_accepted, const std::string& failure_kind = "");
    void regen_done();
    void hack_result(bool break_found, const std::string& failure_kind = "");
    void hack_exhausted();

private:
    void expect(Phase phase, const char* event) const;
    void enter_solver_iteration(Phase phase);
    void finish(bool success, const std::string& outcome);

    Budgets budgets_;
    Phase phase_ = Phase::PLAN;
    int solver_iterations_ = 0;
    int hack_rounds_ = 0;
    int oracle_attempts_ = 0;
    std::string last_failure_;
    bool failure_free_ = true;
};

/// Feature keys for the current pipeline position: FSM phase, optional
/// previous-failure kind, and one TAG key per problem tag.
BanditContext make_context(Phase phase, const std::string& last_failure,
                           const std::set<std::string>& tags);
BanditContext make_hack_context(AttackRoute route, const std::string& last_failure,
                                const std::set<std::string>& tags);

/// Tag-prediction reward: +1 per predicted tag found in the truth set, -1
/// otherwise, normalized by the prediction count into [-1, 1] (0 when
/// nothing was predicted). Throws when the truth set is empty.
double planner_reward(const std::set<std::string>& predicted_tags,
                      const std::set<std::string>& true_tags);

struct OrchestratorConfig {
    Budgets budgets;
    OracleConfig oracle;
    HackerAgent::Config hacker;
    ToolchainConfig toolchain;
    ExecutionLimits limits;
    DecodingParams decoding;
    std::filesystem::path data_dir = "artifacts/trainable_memory";
    std::filesystem::path graph_dir = "artifacts/solver_network/graph";
    std::size_t plan_top_k = 3;
    std::size_t solve_top_k = 3;
    double advice_epsilon = 0.1;
    std::uint64_t rng_seed = 1;
    std::size_t skill_sample_n = 5;
    double skill_temperature = 0.2;
    std::size_t top_k_queries = 4;
    double reinforce_alpha = 0.01;
    bool persist_stores = false;
    // External judge verdict used when certification reaches 1.0; scripted
    // scenarios inject it, real runs leave it unset (no reward then).
    std::optional<JudgeAgreement> injected_judge_verdict;
    // Corpus lookup for double-failure contrastive growth.
    std::function<std::optional<std::string>(const Embedding&)> corpus_lookup;
};

// Drives the closed loop per problem: plan, certified oracle build, solver
// draft / patch iterations behind the regression gate, adversarial hack
// rounds with cross-namespace break propagation, and reward finalization.
class Orchestrator {
public:
    Orchestrator(const Sandbox& sandbox, MemoryStore& store, FamilyCatalog& catalog,
                 QmsGraph& graph, EventBus& bus, EmbedderPort& embedder, LlmPort& llm,
                 PromptLibrary prompts, OrchestratorConfig config = {});

    EpisodeRecord run_problem(const ProblemRecord& problem);

    struct TrainingResult {
        double reward_with = 0.0;
        double reward_without = 0.0;
        double delta_r = 0.0;
        bool weights_updated = false;
        QmsGraph::GraphDelta growth;
        EpisodeRecord with_record;
        EpisodeRecord without_record;
    };

    /// Paired with/without-augmentation rollouts over one shared certified
    /// artifact; the pass-rate difference on the certified suite drives the
    /// policy-gradient update and outcome-driven growth.
    TrainingResult training_rollout(const ProblemRecord& problem);

    const OrchestratorConfig& config() const { return config_; }

private:
    struct RunOptions {
        bool augment = true;
        bool apply_rewards = true;
        const SupervisionArtifact* prebuilt_artifact = nullptr;
    };

    struct RunState;

    EpisodeRecord run_internal(const ProblemRecord& problem, const RunOptions& options,
                               QmsGraph::SampledSkills* sampled_out,
                               double* certified_pass_rate_out,
                               std::string* final_source_out,
                               SupervisionArtifact* artifact_out);

    std::string call_llm(RunState& state, const std::string& prompt_name,
                         const std::map<std::string, std::string>& bindings);
    void wire_bus_handlers();

    const Sandbox& sandbox_;
    MemoryStore& store_;
    FamilyCatalog& catalog_;
    QmsGraph& graph_;
    EventBus& bus_;
    EmbedderPort& embedder_;
    LlmPort& llm_;
    PromptLibrary prompts_;
    OrchestratorConfig config_;

    // Per-run wiring target for bus handlers (episodes are sequential).
    RunState* active_run_ = nullptr;
};

} // namespace solvita
