#include "solvita/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace solvita {

std::string to_string(Phase phase) {
    switch (phase) {
    case Phase::PLAN: return "PLAN";
    case Phase::ORACLE_BUILD: return "ORACLE_BUILD";
    case Phase::SOLVE_DRAFT: return "SOLVE_DRAFT";
    case Phase::SELF_VALIDATE: return "SELF_VALIDATE";
    case Phase::PATCH_DECISION: return "PATCH_DECISION";
    case Phase::SOLVE_PATCH: return "SOLVE_PATCH";
    case Phase::SOLVE_REGEN: return "SOLVE_REGEN";
    case Phase::HACK_ROUND: return "HACK_ROUND";
    case Phase::FINALIZE: return "FINALIZE";
    }
    throw std::logic_error("unreachable phase");
}

PipelineStateMachine::PipelineStateMachine(Budgets budgets) : budgets_(budgets) {}

void PipelineStateMachine::expect(Phase phase, const char* event) const {
    if (phase_ != phase) {
        throw StateError(std::string("event '") + event + "' is illegal in phase " +
                         to_string(phase_));
    }
}

void PipelineStateMachine::finish(bool success, const std::string& outcome) {
    phase_ = Phase::FINALIZE;
    failure_free_ = success;
    if (!success) {
        last_failure_ = outcome;
    }
}

void PipelineStateMachine::enter_solver_iteration(Phase phase) {
    ++solver_iterations_;
    if (solver_iterations_ > budgets_.max_solver_iterations) {
        throw StateError("solver iteration budget exceeded");
    }
    phase_ = phase;
}

void PipelineStateMachine::plan_done() {
    expect(Phase::PLAN, "plan_done");
    phase_ = Phase::ORACLE_BUILD;
}

void PipelineStateMachine::oracle_result(bool accepted) {
    expect(Phase::ORACLE_BUILD, "oracle_result");
    ++oracle_attempts_;
    if (oracle_attempts_ > budgets_.max_family_attempts) {
        throw StateError("oracle family-attempt budget exceeded");
    }
    if (accepted) {
        enter_solver_iteration(Phase::SOLVE_DRAFT);
        return;
    }
    if (oracle_attempts_ >= budgets_.max_family_attempts) {
        finish(false, "oracle_rejected");
    }
}

void PipelineStateMachine::draft_done() {
    expect(Phase::SOLVE_DRAFT, "draft_done");
    phase_ = Phase::SELF_VALIDATE;
}

void PipelineStateMachine::validation_result(bool all_pass, const std::string& failure_kind) {
    expect(Phase::SELF_VALIDATE, "validation_result");
    if (all_pass) {
        last_failure_.clear();
        // A candidate that passes everything after the hack budget is spent
        // has nothing left to be attacked with.
        if (hack_rounds_ >= budgets_.max_hack_rounds) {
            finish(true, "");
        } else {
            phase_ = Phase::HACK_ROUND;
        }
        return;
    }
    last_failure_ = failure_kind.empty() ? "WA" : failure_kind;
    if (solver_iterations_ < budgets_.max_solver_iterations) {
        phase_ = Phase::PATCH_DECISION;
    } else {
        finish(false, last_failure_);
    }
}

void PipelineStateMachine::decision(bool patch_mode) {
    expect(Phase::PATCH_DECISION, "decision");
    enter_solver_iteration(patch_mode ? Phase::SOLVE_PATCH : Phase::SOLVE_REGEN);
}

void PipelineStateMachine::patch_result(bool gate_accepted, const std::string& failure_kind) {
    expect(Phase::SOLVE_PATCH, "patch_result");
    if (gate_accepted) {
        phase_ = Phase::SELF_VALIDATE;
        return;
    }
    last_failure_ = failure_kind.empty() ? "REGRESSION" : failure_kind;
    if (solver_iterations_ < budgets_.max_solver_iterations) {
        phase_ = Phase::PATCH_DECISION;
    } else {
        finish(false, last_failure_);
    }
}

void PipelineStateMachine::regen_done() {
    expect(Phase::SOLVE_REGEN, "regen_done");
    phase_ = Phase::SELF_VALIDATE;
}

void PipelineStateMachine::hack_result(bool break_found, const std::string& failure_kind) {
    expect(Phase::HACK_ROUND, "hack_result");
    ++hack_rounds_;
    if (hack_rounds_ > budgets_.max_hack_rounds) {
        throw StateError("hack round budget exceeded");
    }
    if (break_found) {
        last_failure_ = failure_kind.empty() ? "WA" : failure_kind;
        if (solver_iterations_ < budgets_.max_solver_iterations) {
            phase_ = Phase::PATCH_DECISION;
        } else {
            finish(false, last_failure_);
        }
        return;
    }
    if (hack_rounds_ >= budgets_.max_hack_rounds) {
        finish(true, "");
    }
    // Otherwise stay in HACK_ROUND for the next cascade route.
}

void PipelineStateMachine::hack_exhausted() {
    expect(Phase::HACK_ROUND, "hack_exhausted");
    finish(true, "");
}

BanditContext make_context(Phase phase, const std::string& last_failure,
                           const std::set<std::string>& tags) {
    BanditContext ctx;
    ctx.active_keys.insert(fsm_key(to_string(phase)));
    if (!last_failure.empty()) {
        ctx.active_keys.insert(fail_key(last_failure));
    }
    for (const std::string& tag : tags) {
        ctx.active_keys.insert(tag_key(tag));
        ctx.problem_tags.insert(tag);
    }
    return ctx;
}

BanditContext make_hack_context(AttackRoute route, const std::string& last_failure,
                                const std::set<std::string>& tags) {
    BanditContext ctx;
    std::string token = "HACK_" + to_string(route);
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    ctx.active_keys.insert(fsm_key(token));
    if (!last_failure.empty()) {
        ctx.active_keys.insert(fail_key(last_failure));
    }
    for (const std::string& tag : tags) {
        ctx.active_keys.insert(tag_key(tag));
        ctx.problem_tags.insert(tag);
    }
    return ctx;
}

double planner_reward(const std::set<std::string>& predicted_tags,
                      const std::set<std::string>& true_tags) {
    if (true_tags.empty()) {
        throw std::invalid_argument("planner reward requires a non-empty truth tag set");
    }
    if (predicted_tags.empty()) {
        return 0.0;
    }
    double raw = 0.0;
    for (const std::string& tag : predicted_tags) {
        raw += true_tags.count(tag) != 0 ? 1.0 : -1.0;
    }
    return raw / static_cast<double>(predicted_tags.size());
}

namespace {

std::string failure_token(VerdictKind kind) {
    std::string token = to_string(kind);
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return token;
}

std::string truncate(const std::string& text, std::size_t limit = 300) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

std::string render_tests_block(const std::vector<TestPair>& tests) {
    std::string out;
    for (std::size_t i = 0; i < tests.size(); ++i) {
        out += "--- test " + std::to_string(i + 1) + " input ---\n" + tests[i].input +
               "\n--- expected output ---\n" + tests[i].output + "\n";
    }
    return out.empty() ? "(none)" : out;
}

std::string render_advice(const std::vector<MemoryItem>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (const MemoryItem& item : items) {
        out += "- [" + item.id + "] " + item.summary + "\n";
    }
    return out;
}

// Pulls the last fenced code block out of a completion; a fenceless
// completion is treated as raw code.
std::string extract_code(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = text.find("```", pos);
        if (open == std::string::npos) break;
        std::size_t content = text.find('\n', open);
        if (content == std::string::npos) break;
        ++content;
        const std::size_t close = text.find("```", content);
        if (close == std::string::npos) break;
        blocks.emplace_back(content, close);
        pos = close + 3;
    }
    if (blocks.empty()) {
        return text;
    }
    const auto [begin, end] = blocks.back();
    return text.substr(begin, end - begin);
}

std::uint64_t fnv64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string hex16(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex << value;
    return out.str();
}

} // namespace

struct Orchestrator::RunState {
    const ProblemRecord* problem = nullptr;
    RunOptions options;
    EpisodeRecord record;
    PipelineStateMachine fsm;
    PhaseLog* open_phase = nullptr;

    std::set<std::string> predicted_tags;
    std::string algorithm_hint;
    std::string strategy_item_id;
    BanditContext plan_ctx;

    SupervisionArtifact artifact;
    std::optional<JudgeContext> judge;
    std::optional<CompiledBinary> validator_binary;

    std::string candidate_source;
    std::optional<CompiledBinary> candidate_binary;
    std::map<std::string, bool> last_results;
    std::optional<std::map<std::string, bool>> pending_results;
    std::vector<std::pair<std::string, std::string>> extra_tests; // (test id, input)

    std::optional<HackerAgent> hacker;
    std::vector<std::pair<AttackRoute, double>> hack_rewards;

    QmsGraph::SampledSkills sampled;
    bool sampled_set = false;
    std::optional<QueryNode> q_new;

    std::uint64_t select_counter = 0;

    PhaseLog& phase_log(Phase phase) {
        record.phases.push_back(PhaseLog{to_string(phase), "", {}, nlohmann::json::array()});
        open_phase = &record.phases.back();
        return *open_phase;
    }
};

Orchestrator::Orchestrator(const Sandbox& sandbox, MemoryStore& store, FamilyCatalog& catalog,
                           QmsGraph& graph, EventBus& bus, EmbedderPort& embedder, LlmPort& llm,
                           PromptLibrary prompts, OrchestratorConfig config)
    : sandbox_(sandbox), store_(store), catalog_(catalog), graph_(graph), bus_(bus),
      embedder_(embedder), llm_(llm), prompts_(std::move(prompts)), config_(std::move(config)) {
    config_.oracle.toolchain = config_.toolchain;
    config_.oracle.limits = config_.limits;
    config_.hacker.toolchain = config_.toolchain;
    config_.hacker.limits = config_.limits;
    config_.hacker.max_rounds = config_.budgets.max_hack_rounds;
    wire_bus_handlers();
}

std::string Orchestrator::call_llm(RunState& state, const std::string& prompt_name,
                                   const std::map<std::string, std::string>& bindings) {
    const std::string prompt = render_prompt(prompts_.get(prompt_name), bindings);
    std::string response;
    try {
        response = llm_.complete(prompt_name, prompt, config_.decoding);
    } catch (const LlmError&) {
        // One retry, then the episode aborts with the transcript intact.
        response = llm_.complete(prompt_name, prompt, config_.decoding);
    }
    if (state.open_phase != nullptr) {
        state.open_phase->exchanges.push_back({prompt_name, prompt, response});
    }
    return response;
}

void Orchestrator::wire_bus_handlers() {
    // Break events fan out with role-specific payloads: plan takes a negative
    // reward on the active strategy, solve records a contrastive growth
    // request, oracle records a generator hint, hack bumps the route.
    bus_.subscribe(MemoryNamespace::plan, [this](MemoryNamespace, const BreakEvent& event) {
        if (active_run_ == nullptr || active_run_->strategy_item_id.empty()) return;
        RunState& run = *active_run_;
        const BanditContext ctx = make_hack_context(event.route, failure_token(event.verdict),
                                                    run.problem->tags);
        const double reward = -severity(event.verdict);
        store_.apply_reward(MemoryNamespace::plan, run.strategy_item_id, reward, ctx);
        run.record.effects.push_back({StoreEffect::Kind::item_reward, MemoryNamespace::plan,
                                      run.strategy_item_id, reward, ctx,
                                      {{"cause", "hack_break"}}, false});
    });
    bus_.subscribe(MemoryNamespace::solve, [this](MemoryNamespace, const BreakEvent& event) {
        if (active_run_ == nullptr) return;
        RunState& run = *active_run_;
        MemoryItem item;
        item.id = "growth:" + event.problem_id + ":" + hex16(fnv64(event.breaking_input));
        item.ns = MemoryNamespace::solve;
        item.summary = "contrastive growth request from a " + to_string(event.route) + " break";
        item.payload = {{"breaking_input", event.breaking_input},
                        {"route", to_string(event.route)},
                        {"verdict", to_string(event.verdict)}};
        item.tags = run.problem->tags;
        if (!store_.contains(MemoryNamespace::solve, item.id)) {
            store_.add(item);
            run.record.effects.push_back({StoreEffect::Kind::item_create, MemoryNamespace::solve,
                                          item.id, 0.0, BanditContext{},
                                          store_.get(MemoryNamespace::solve, item.id)->to_json(),
                                          false});
        }
    });
    bus_.subscribe(MemoryNamespace::oracle, [this](MemoryNamespace, const BreakEvent& event) {
        if (active_run_ == nullptr) return;
        RunState& run = *active_run_;
        MemoryItem item;
        item.id = "genhint:" + event.problem_id + ":" + hex16(fnv64(event.breaking_input));
        item.ns = MemoryNamespace::oracle;
        item.summary = "generator hint: input pattern missed by certification";
        item.payload = {{"input_pattern", truncate(event.breaking_input, 2000)},
                        {"route", to_string(event.route)},
                        {"verdict", to_string(event.verdict)}};
        item.tags = run.problem->tags;
        if (!store_.contains(MemoryNamespace::oracle, item.id)) {
            store_.add(item);
            run.record.effects.push_back({StoreEffect::Kind::item_create, MemoryNamespace::oracle,
                                          item.id, 0.0, BanditContext{},
                                          store_.get(MemoryNamespace::oracle, item.id)->to_json(),
                                          false});
        }
    });
    bus_.subscribe(MemoryNamespace::hack, [this](MemoryNamespace, const BreakEvent& event) {
        if (active_run_ == nullptr) return;
        RunState& run = *active_run_;
        const std::string route_id = "route:" + to_string(event.route);
        const BanditContext ctx = make_hack_context(event.route, failure_token(event.verdict),
                                                    run.problem->tags);
        if (!store_.contains(MemoryNamespace::hack, route_id)) {
            MemoryItem item;
            item.id = route_id;
            item.ns = MemoryNamespace::hack;
            item.summary = to_string(event.route) + " attack route";
            item.payload = {{"route", to_string(event.route)}};
            store_.add(item);
            run.record.effects.push_back({StoreEffect::Kind::item_create, MemoryNamespace::hack,
                                          route_id, 0.0, BanditContext{},
                                          store_.get(MemoryNamespace::hack, route_id)->to_json(),
                                          false});
        }
        const double reward = severity(event.verdict);
        store_.apply_reward(MemoryNamespace::hack, route_id, reward, ctx);
        run.record.effects.push_back({StoreEffect::Kind::item_reward, MemoryNamespace::hack,
                                      route_id, reward, ctx, {{"cause", "hack_break"}}, false});
    });
}

EpisodeRecord Orchestrator::run_problem(const ProblemRecord& problem) {
    RunOptions options;
    return run_internal(problem, options, nullptr, nullptr, nullptr, nullptr);
}

EpisodeRecord Orchestrator::run_internal(const ProblemRecord& problem, const RunOptions& options,
                                         QmsGraph::SampledSkills* sampled_out,
                                         double* certified_pass_rate_out,
                                         std::string* final_source_out,
                                         SupervisionArtifact* artifact_out) {
    RunState state;
    state.problem = &problem;
    state.options = options;
    state.record.problem_id = problem.id;
    state.fsm = PipelineStateMachine(config_.budgets);
    active_run_ = &state;

    auto seed_next = [&] {
        return config_.rng_seed * 1000003ull + state.select_counter++;
    };

    auto run_suite = [&](const std::optional<CompiledBinary>& binary,
                         std::map<std::string, bool>& results, std::string& first_failure,
                         nlohmann::json& verdicts_json) {
        results.clear();
        first_failure.clear();
        std::vector<std::pair<std::string, std::string>> tests;
        for (std::size_t i = 0; i < problem.public_tests.size(); ++i) {
            tests.emplace_back("public-" + std::to_string(i + 1), problem.public_tests[i].input);
        }
        for (std::size_t i = 0; i < state.artifact.inputs.size(); ++i) {
            tests.emplace_back("cert-" + std::to_string(i + 1), state.artifact.inputs[i]);
        }
        for (const auto& [id, input] : state.extra_tests) {
            tests.emplace_back(id, input);
        }
        bool all_pass = true;
        if (!binary.has_value()) {
            for (const auto& [id, input] : tests) {
                results[id] = false;
            }
            first_failure = "COMPILE_FAIL";
            return false;
        }
        for (const auto& [id, input] : tests) {
            Verdict verdict = resolve_judgement(input, *binary, *state.judge, sandbox_,
                                                config_.limits);
            const bool pass = verdict.kind == VerdictKind::AC;
            results[id] = pass;
            verdicts_json.push_back({{"test_id", id},
                                     {"kind", to_string(verdict.kind)},
                                     {"judge_source", to_string(verdict.judge_source)},
                                     {"elapsed_seconds", verdict.elapsed_seconds}});
            if (!pass) {
                all_pass = false;
                if (first_failure.empty()) {
                    first_failure = failure_token(verdict.kind);
                }
            }
        }
        return all_pass;
    };

    auto failures_block = [&](const std::map<std::string, bool>& results) {
        std::string out;
        for (const auto& [id, pass] : results) {
            if (pass) continue;
            std::string input = "(unavailable)";
            if (id.rfind("public-", 0) == 0) {
                const std::size_t idx = std::stoul(id.substr(7)) - 1;
                input = problem.public_tests[idx].input + "\nexpected:\n" +
                        problem.public_tests[idx].output;
            } else if (id.rfind("cert-", 0) == 0) {
                const std::size_t idx = std::stoul(id.substr(5)) - 1;
                input = state.artifact.inputs[idx];
            } else {
                for (const auto& [tid, tinput] : state.extra_tests) {
                    if (tid == id) input = tinput;
                }
            }
            out += "failing test " + id + ":\n" + truncate(input) + "\n";
        }
        return out.empty() ? "(none)" : out;
    };

    auto compile_candidate = [&]() -> bool {
        if (state.candidate_binary.has_value()) return true;
        CompileResult compiled = sandbox_.compile(state.candidate_source, config_.toolchain);
        if (!compiled.ok()) {
            return false;
        }
        state.candidate_binary = std::move(*compiled.binary);
        return true;
    };

    while (!state.fsm.finished()) {
        switch (state.fsm.phase()) {
        case Phase::PLAN: {
            PhaseLog& log = state.phase_log(Phase::PLAN);
            state.plan_ctx = make_context(Phase::PLAN, "", problem.tags);
            const auto advice = store_.select_advice(MemoryNamespace::plan, state.plan_ctx,
                                                     config_.plan_top_k, config_.advice_epsilon,
                                                     seed_next());
            const std::string response =
                call_llm(state, "abstract_problem",
                         {{"PROBLEM_DESC", problem.statement},
                          {"CONSTRAINTS_JSON", problem.constraints.dump()},
                          {"MEMORY_ADVICE", render_advice(advice)}});
            try {
                const nlohmann::json parsed = nlohmann::json::parse(response);
                for (const char* key : {"algorithmic_tags_level1", "algorithmic_tags_level2"}) {
                    if (parsed.contains(key)) {
                        for (const auto& tag : parsed.at(key)) {
                            state.predicted_tags.insert(tag.get<std::string>());
                        }
                    }
                }
                if (parsed.contains("canonical_problem") &&
                    parsed.at("canonical_problem").contains("objective")) {
                    state.algorithm_hint =
                        parsed.at("canonical_problem").at("objective").get<std::string>();
                }
            } catch (const nlohmann::json::exception&) {
                log.note = "unparseable plan output; proceeding without predicted tags";
            }
            state.strategy_item_id = "strategy:" + problem.id;
            if (!store_.contains(MemoryNamespace::plan, state.strategy_item_id)) {
                MemoryItem item;
                item.id = state.strategy_item_id;
                item.ns = MemoryNamespace::plan;
                item.summary = "strategy record for problem " + problem.id;
                item.payload = {{"predicted_tags", state.predicted_tags},
                                {"objective", state.algorithm_hint}};
                item.tags = problem.tags;
                store_.add(item);
                state.record.effects.push_back(
                    {StoreEffect::Kind::item_create, MemoryNamespace::plan,
                     state.strategy_item_id, 0.0, BanditContext{},
                     store_.get(MemoryNamespace::plan, state.strategy_item_id)->to_json(),
                     false});
            }
            state.fsm.plan_done();
            break;
        }
        case Phase::ORACLE_BUILD: {
            PhaseLog& log = state.phase_log(Phase::ORACLE_BUILD);
            const BanditContext ctx =
                make_context(Phase::ORACLE_BUILD, state.fsm.last_failure(), problem.tags);
            bool accepted = false;
            if (options.prebuilt_artifact != nullptr) {
                state.artifact = *options.prebuilt_artifact;
                accepted = state.artifact.accepted;
                log.note = "reusing prebuilt supervision artifact";
                state.fsm.oracle_result(accepted);
            } else {
                Oracle oracle(sandbox_, config_.oracle);
                OracleAgent agent(oracle, catalog_);
                const auto llm_call = [&](const std::string& name,
                                          const std::map<std::string, std::string>& bindings) {
                    return call_llm(state, name, bindings);
                };
                const auto external_judge = [&]() {
                    return config_.injected_judge_verdict.value_or(JudgeAgreement::none);
                };
                OracleBuildResult built = agent.build(problem, ctx, llm_call, external_judge);
                for (const auto& attempt : built.attempt_log) {
                    if (attempt.reward_applied) {
                        state.record.effects.push_back(
                            {StoreEffect::Kind::family_reward, MemoryNamespace::oracle,
                             attempt.family_id, attempt.reward, ctx,
                             {{"cert_ratio", attempt.cert_ratio},
                              {"failure_mode", to_string(attempt.failure)}},
                             attempt.accepted});
                    }
                }
                state.artifact = std::move(built.artifact);
                accepted = state.artifact.accepted;
                log.note = "attempts=" + std::to_string(built.attempts) +
                           " cert_ratio=" + std::to_string(state.artifact.cert_ratio);
                for (int i = 1; i < built.attempts; ++i) {
                    state.fsm.oracle_result(false);
                    if (state.fsm.finished()) break;
                }
                if (!state.fsm.finished()) {
                    state.fsm.oracle_result(accepted);
                }
            }
            if (accepted) {
                state.judge = JudgeContext::from_artifact(state.artifact, sandbox_,
                                                          config_.toolchain, config_.limits);
                for (const TestPair& test : problem.public_tests) {
                    state.judge->add_expected(test.input, test.output);
                }
                CompileResult validator =
                    sandbox_.compile(state.artifact.validator_src, config_.toolchain);
                if (validator.ok()) {
                    state.validator_binary = std::move(*validator.binary);
                }
            }
            break;
        }
        case Phase::SOLVE_DRAFT: {
            PhaseLog& log = state.phase_log(Phase::SOLVE_DRAFT);
            const BanditContext ctx =
                make_context(Phase::SOLVE_DRAFT, state.fsm.last_failure(), problem.tags);
            const auto advice = store_.select_advice(MemoryNamespace::solve, ctx,
                                                     config_.solve_top_k, config_.advice_epsilon,
                                                     seed_next());
            std::string graph_block = "(none)";
            if (options.augment && graph_.skill_count() > 0) {
                state.q_new = QueryNode{"q:" + problem.id, problem.statement, problem.tags,
                                        embedder_.embed(problem.statement)};
                const auto scores = graph_.skill_scores(*state.q_new, config_.top_k_queries);
                if (!scores.empty()) {
                    state.sampled = graph_.sample_skills(scores, config_.skill_temperature,
                                                         config_.skill_sample_n, seed_next());
                    state.sampled_set = true;
                    graph_block.clear();
                    for (const std::string& skill_id : state.sampled.skills) {
                        const SkillNode& skill = graph_.skill(skill_id);
                        graph_block += "### skill " + skill.id + ": " + skill.title + "\n" +
                                       skill.description + "\n```cpp\n" + skill.code_template +
                                       "\n```\n";
                    }
                    if (graph_block.empty()) graph_block = "(none)";
                }
            }
            const std::string response = call_llm(
                state, "generate_code.initial",
                {{"PROBLEM_DESC", problem.statement},
                 {"ALGORITHM", state.algorithm_hint.empty() ? "(none)" : state.algorithm_hint},
                 {"CONSTRAINTS_BLOCK", problem.constraints.dump()},
                 {"PUBLIC_BLOCK", render_tests_block(problem.public_tests)},
                 {"SOLVER_GRAPH_BLOCK", graph_block},
                 {"MEMORY_ADVICE", render_advice(advice)}});
            state.candidate_source = extract_code(response);
            state.candidate_binary.reset();
            log.note = "draft of " + std::to_string(state.candidate_source.size()) + " bytes";
            state.fsm.draft_done();
            break;
        }
        case Phase::SELF_VALIDATE: {
            PhaseLog& log = state.phase_log(Phase::SELF_VALIDATE);
            bool all_pass = false;
            std::string first_failure;
            if (state.pending_results.has_value()) {
                state.last_results = std::move(*state.pending_results);
                state.pending_results.reset();
                all_pass = std::all_of(state.last_results.begin(), state.last_results.end(),
                                       [](const auto& kv) { return kv.second; });
                if (!all_pass) first_failure = "WA";
                log.note = "reusing results from the accepted patch run";
            } else {
                const bool compiled = compile_candidate();
                if (!compiled) {
                    std::map<std::string, bool> results;
                    run_suite(std::nullopt, results, first_failure, log.verdicts);
                    state.last_results = std::move(results);
                    all_pass = false;
                    first_failure = "COMPILE_FAIL";
                } else {
                    std::map<std::string, bool> results;
                    all_pass = run_suite(state.candidate_binary, results, first_failure,
                                         log.verdicts);
                    state.last_results = std::move(results);
                }
            }
            state.fsm.validation_result(all_pass, first_failure);
            break;
        }
        case Phase::PATCH_DECISION: {
            PhaseLog& log = state.phase_log(Phase::PATCH_DECISION);
            const BanditContext ctx =
                make_context(Phase::PATCH_DECISION, state.fsm.last_failure(), problem.tags);
            const auto advice = store_.select_advice(MemoryNamespace::solve, ctx,
                                                     config_.solve_top_k, config_.advice_epsilon,
                                                     seed_next());
            const std::string response =
                call_llm(state, "generate_code.patch_decision",
                         {{"PROBLEM_DESC", problem.statement},
                          {"PREV_CODE", state.candidate_source},
                          {"FAILURES_BLOCK", failures_block(state.last_results)},
                          {"MEMORY_ADVICE", render_advice(advice)}});
            bool patch_mode = false; // malformed decisions regenerate from scratch
            try {
                const nlohmann::json parsed = nlohmann::json::parse(response);
                patch_mode = parsed.at("mode").get<std::string>() == "patch";
            } catch (const nlohmann::json::exception&) {
                log.note = "malformed patch decision; defaulting to full_regen";
            }
            state.fsm.decision(patch_mode);
            break;
        }
        case Phase::SOLVE_PATCH: {
            PhaseLog& log = state.phase_log(Phase::SOLVE_PATCH);
            const std::string response =
                call_llm(state, "generate_code.patch",
                         {{"PROBLEM_DESC", problem.statement},
                          {"PREV_CODE", state.candidate_source},
                          {"FAILURES_BLOCK", failures_block(state.last_results)},
                          {"MEMORY_ADVICE", "(none)"}});
            std::string patched;
            try {
                std::vector<EditBlock> blocks = parse_patch(response);
                patched = apply_patch(state.candidate_source, blocks);
            } catch (const std::exception& e) {
                log.note = std::string("patch rejected: ") + e.what();
                state.fsm.patch_result(false, "PATCH_APPLY");
                break;
            }
            CompileResult compiled = sandbox_.compile(patched, config_.toolchain);
            if (!compiled.ok()) {
                log.note = "patched source does not compile";
                state.fsm.patch_result(false, "COMPILE_FAIL");
                break;
            }
            std::map<std::string, bool> after;
            std::string first_failure;
            run_suite(*compiled.binary, after, first_failure, log.verdicts);
            const RegressionReport gate = regression_gate(state.last_results, after);
            nlohmann::json gate_json = {{"accepted", gate.accepted},
                                        {"fixed", gate.fixed},
                                        {"regressed", gate.regressed},
                                        {"still_failing", gate.still_failing}};
            log.note = "regression gate: " + gate_json.dump();
            if (gate.accepted) {
                state.candidate_source = patched;
                state.candidate_binary = std::move(*compiled.binary);
                state.pending_results = std::move(after);
                state.fsm.patch_result(true);
            } else {
                state.fsm.patch_result(false, "REGRESSION");
            }
            break;
        }
        case Phase::SOLVE_REGEN: {
            PhaseLog& log = state.phase_log(Phase::SOLVE_REGEN);
            const std::string response =
                call_llm(state, "generate_code.regenerate",
                         {{"PROBLEM_DESC", problem.statement},
                          {"PREV_CODE", state.candidate_source},
                          {"FAILURES_BLOCK", failures_block(state.last_results)},
                          {"MEMORY_ADVICE", "(none)"}});
            state.candidate_source = extract_code(response);
            state.candidate_binary.reset();
            log.note = "regenerated candidate";
            state.fsm.regen_done();
            break;
        }
        case Phase::HACK_ROUND: {
            PhaseLog& log = state.phase_log(Phase::HACK_ROUND);
            if (!state.hacker.has_value()) {
                state.hacker.emplace(sandbox_, config_.hacker);
            }
            const auto llm_call = [&](const std::string& name,
                                      const std::map<std::string, std::string>& bindings) {
                return call_llm(state, name, bindings);
            };
            if (!state.hacker->has_report()) {
                state.hacker->analyze(problem, state.candidate_source, llm_call);
            }
            if (!compile_candidate()) {
                throw StateError("candidate lost between validation and hack round");
            }
            HackerAgent::RoundOutcome outcome =
                state.hacker->run_round(problem, *state.candidate_binary, state.validator_binary,
                                        *state.judge, llm_call);
            if (outcome.exhausted) {
                log.note = "attack routes exhausted";
                state.fsm.hack_exhausted();
                break;
            }
            state.hack_rewards.emplace_back(outcome.route, outcome.reward);
            log.note = "route=" + to_string(outcome.route) +
                       " reward=" + std::to_string(outcome.reward) +
                       " breaks=" + std::to_string(outcome.breaks.size());
            for (const Verdict& verdict : outcome.verdicts.all) {
                log.verdicts.push_back({{"kind", to_string(verdict.kind)},
                                        {"judge_source", to_string(verdict.judge_source)}});
            }
            if (!outcome.breaks.empty()) {
                for (const auto& [input, verdict] : outcome.breaks) {
                    BreakEvent event{problem.id, outcome.route, input, verdict.kind};
                    const std::size_t writes = bus_.emit_break(event);
                    state.record.break_namespace_writes += writes;
                    if (writes > 0) {
                        const std::string test_id =
                            "hack-" + std::to_string(state.extra_tests.size() + 1);
                        state.extra_tests.emplace_back(test_id, input);
                        state.last_results[test_id] = false;
                    }
                }
                state.fsm.hack_result(true, failure_token(outcome.breaks.front().second.kind));
            } else {
                state.fsm.hack_result(false);
            }
            break;
        }
        case Phase::FINALIZE:
            break;
        }
    }

    // FINALIZE: apply the namespace rewards and seal the record.
    PhaseLog& final_log = state.phase_log(Phase::FINALIZE);
    if (options.apply_rewards) {
        if (!problem.tags.empty() && !state.strategy_item_id.empty()) {
            const double reward = planner_reward(state.predicted_tags, problem.tags);
            store_.apply_reward(MemoryNamespace::plan, state.strategy_item_id, reward,
                                state.plan_ctx);
            state.record.effects.push_back({StoreEffect::Kind::item_reward, MemoryNamespace::plan,
                                            state.strategy_item_id, reward, state.plan_ctx,
                                            {{"cause", "planner_tag_reward"}}, false});
        }
        for (const auto& [route, reward] : state.hack_rewards) {
            const std::string route_id = "route:" + to_string(route);
            const BanditContext ctx = make_hack_context(route, "", problem.tags);
            if (!store_.contains(MemoryNamespace::hack, route_id)) {
                MemoryItem item;
                item.id = route_id;
                item.ns = MemoryNamespace::hack;
                item.summary = to_string(route) + " attack route";
                item.payload = {{"route", to_string(route)}};
                store_.add(item);
                state.record.effects.push_back(
                    {StoreEffect::Kind::item_create, MemoryNamespace::hack, route_id, 0.0,
                     BanditContext{}, store_.get(MemoryNamespace::hack, route_id)->to_json(),
                     false});
            }
            const double clipped = std::clamp(reward, -1.0, 1.0);
            store_.apply_reward(MemoryNamespace::hack, route_id, clipped, ctx);
            state.record.effects.push_back({StoreEffect::Kind::item_reward, MemoryNamespace::hack,
                                            route_id, clipped, ctx,
                                            {{"cause", "hack_round_reward"}}, false});
        }
    }
    state.record.solver_iterations = state.fsm.solver_iterations();
    state.record.hack_rounds = state.fsm.hack_rounds();
    state.record.final_outcome =
        state.fsm.succeeded()
            ? "solved"
            : "failed:" + (state.fsm.last_failure().empty() ? "budget"
                                                            : state.fsm.last_failure());
    final_log.note = state.record.final_outcome;

    if (config_.persist_stores) {
        store_.persist_all();
        std::filesystem::create_directories(config_.data_dir);
        catalog_.save(config_.data_dir / "families.json");
        if (graph_.skill_count() > 0 || graph_.query_count() > 0) {
            graph_.save(config_.graph_dir);
        }
    }
    state.record.store_digest = store_state_digest(store_, catalog_);

    if (sampled_out != nullptr && state.sampled_set) {
        *sampled_out = state.sampled;
    }
    if (certified_pass_rate_out != nullptr) {
        int cert_total = 0;
        int cert_pass = 0;
        for (const auto& [id, pass] : state.last_results) {
            if (id.rfind("cert-", 0) == 0) {
                ++cert_total;
                if (pass) ++cert_pass;
            }
        }
        *certified_pass_rate_out =
            cert_total == 0 ? 0.0
                            : static_cast<double>(cert_pass) / static_cast<double>(cert_total);
    }
    if (final_source_out != nullptr) {
        *final_source_out = state.candidate_source;
    }
    if (artifact_out != nullptr) {
        *artifact_out = state.artifact;
    }
    active_run_ = nullptr;
    return state.record;
}

Orchestrator::TrainingResult Orchestrator::training_rollout(const ProblemRecord& problem) {
    TrainingResult result;

    QmsGraph::SampledSkills sampled;
    double rate_with = 0.0;
    std::string source_with;
    SupervisionArtifact artifact;
    RunOptions with_options;
    with_options.augment = true;
    with_options.apply_rewards = true;
    result.with_record =
        run_internal(problem, with_options, &sampled, &rate_with, &source_with, &artifact);

    double rate_without = 0.0;
    std::string source_without;
    RunOptions without_options;
    without_options.augment = false;
    without_options.apply_rewards = false;
    without_options.prebuilt_artifact = artifact.accepted ? &artifact : nullptr;
    result.without_record = run_internal(problem, without_options, nullptr, &rate_without,
                                         &source_without, nullptr);

    result.reward_with = rate_with;
    result.reward_without = rate_without;
    result.delta_r = rate_with - rate_without;

    const QueryNode q_new{"q:" + problem.id, problem.statement, problem.tags,
                          embedder_.embed(problem.statement)};
    if (!sampled.skills.empty() && result.delta_r != 0.0) {
        graph_.reinforce_update(sampled, q_new, result.delta_r, config_.reinforce_alpha);
        result.weights_updated = true;
    }

    QmsGraph::GrowthArtifacts artifacts;
    artifacts.with_source = source_with;
    artifacts.without_source = source_without;
    artifacts.context_embedding = q_new.embedding;
    artifacts.nearest_corpus_solution = config_.corpus_lookup;
    artifacts.embed_text = [this](const std::string& text) { return embedder_.embed(text); };
    result.growth = graph_.grow(q_new, rate_with, rate_without, artifacts);
    return result;
}

} // namespace solvita
