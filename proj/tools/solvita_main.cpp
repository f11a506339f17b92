// Command-line front end: store inspection, graph inspection, the data
// pipeline, contest rating estimation, and scripted/HTTP solve runs.

#include "solvita/data_pipeline.hpp"
#include "solvita/episode.hpp"
#include "solvita/orchestrator.hpp"
#include "solvita/rating.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

using namespace solvita;

namespace {

MemoryStore::Clock fixed_clock() {
    return [] { return std::int64_t{0}; };
}

int cmd_memory(const std::string& action, const std::string& ns_name,
               const std::filesystem::path& data_dir) {
    MemoryStore store(data_dir);
    const MemoryNamespace ns = namespace_from_string(ns_name);
    store.load(ns);
    if (action == "inspect") {
        const auto items = store.items(ns);
        std::cout << "namespace " << ns_name << ": " << items.size() << " item(s)\n";
        for (const MemoryItem& item : items) {
            std::cout << "  " << item.id << (item.deprecated ? " [deprecated]" : "")
                      << " uses=" << item.use_count << " avg_reward=" << item.avg_reward
                      << " bias=" << item.bias << "\n    " << item.summary << "\n";
        }
        return 0;
    }
    if (action == "sweep") {
        const std::size_t swept = store.deprecation_sweep(ns);
        store.persist(ns);
        std::cout << "deprecated " << swept << " item(s) in " << ns_name << "\n";
        return 0;
    }
    std::cerr << "unknown memory action: " << action << "\n";
    return 2;
}

int cmd_graph(const std::string& action, const std::filesystem::path& graph_dir,
              const std::string& out_path) {
    QmsGraph graph = QmsGraph::load(graph_dir);
    if (action == "stats") {
        std::cout << graph.stats_summary() << "\n";
        return 0;
    }
    if (action == "export-dot") {
        const std::string dot = graph.export_dot();
        if (out_path.empty()) {
            std::cout << dot;
        } else {
            std::ofstream out(out_path, std::ios::trunc);
            if (!out) {
                std::cerr << "cannot write " << out_path << "\n";
                return 1;
            }
            out << dot;
        }
        return 0;
    }
    std::cerr << "unknown graph action: " << action << "\n";
    return 2;
}

int cmd_pipeline(const std::string& input, const std::string& stage_arg,
                 const std::string& report_path, const std::string& out_path,
                 std::uint64_t seed, std::size_t cap, double delta,
                 const std::string& floors_path) {
    PipelineConfig config;
    config.tag_cap = cap;
    config.duplicate_threshold = delta;
    config.rng_seed = seed;
    if (!floors_path.empty()) {
        std::ifstream in(floors_path);
        if (!in) {
            std::cerr << "cannot open floors file " << floors_path << "\n";
            return 1;
        }
        nlohmann::json floors;
        in >> floors;
        for (const auto& [tag, value] : floors.items()) {
            config.floor_overrides[tag] = value.get<int>();
        }
    }
    int last_stage = 4;
    if (stage_arg != "all") {
        last_stage = std::stoi(stage_arg);
    }

    HashEmbedder embedder(64);
    DataPipeline pipeline(embedder, config);
    const auto records = load_problem_lines(input);
    const auto result = pipeline.run(records, last_stage);

    std::cout << "raw: " << result.report.raw_count << "\n";
    for (const StageReport& stage : result.report.stages) {
        std::cout << stage.stage << ": " << stage.records_in << " -> " << stage.records_out
                  << "\n";
    }
    if (!report_path.empty()) {
        result.report.save(report_path);
        std::cout << "report written to " << report_path << "\n";
    }
    if (!out_path.empty()) {
        save_problem_lines(out_path, result.survivors);
        std::cout << result.survivors.size() << " survivor(s) written to " << out_path << "\n";
    }
    return 0;
}

int cmd_rate(const std::string& standings_dir, const std::string& agent_path,
             const std::string& out_path) {
    // One columnar file per contest (rating solved penalty last_ac per human
    // row), paired in filename order with one agent row per contest.
    std::vector<std::filesystem::path> contest_files;
    for (const auto& entry : std::filesystem::directory_iterator(standings_dir)) {
        if (entry.is_regular_file()) {
            contest_files.push_back(entry.path());
        }
    }
    std::sort(contest_files.begin(), contest_files.end());
    if (contest_files.empty()) {
        std::cerr << "no standings files in " << standings_dir << "\n";
        return 1;
    }

    std::ifstream agent_in(agent_path);
    if (!agent_in) {
        std::cerr << "cannot open agent file " << agent_path << "\n";
        return 1;
    }
    std::vector<StandingTuple> agent_rows;
    {
        int solved;
        double penalty, last_ac;
        while (agent_in >> solved >> penalty >> last_ac) {
            agent_rows.push_back({solved, penalty, last_ac});
        }
    }
    if (agent_rows.size() != contest_files.size()) {
        std::cerr << "agent file has " << agent_rows.size() << " row(s) but " << standings_dir
                  << " holds " << contest_files.size() << " contest(s)\n";
        return 1;
    }

    std::ostringstream table;
    table << "contest\trank\testimate\trunning_mean\n";
    std::vector<double> estimates;
    for (std::size_t i = 0; i < contest_files.size(); ++i) {
        ContestStandings standings;
        standings.contest_id = contest_files[i].filename().string();
        std::ifstream in(contest_files[i]);
        double rating, penalty, last_ac;
        int solved;
        while (in >> rating >> solved >> penalty >> last_ac) {
            standings.humans.push_back({rating, {solved, penalty, last_ac}});
        }
        standings.agent = agent_rows[i];

        const RankResult rank = insert_rank(standings);
        std::vector<double> ratings;
        ratings.reserve(standings.humans.size());
        for (const auto& [r, tuple] : standings.humans) {
            ratings.push_back(r);
        }
        const RatingEstimate estimate = invert_rating(rank.rank, ratings);
        estimates.push_back(estimate.rating);
        const RatingTrajectory so_far = rating_trajectory(estimates);
        table << standings.contest_id << "\t" << rank.rank << "\t" << estimate.rating
              << (estimate.saturated_high || estimate.saturated_low ? "*" : "") << "\t"
              << so_far.running_means.back() << "\n";
    }
    const RatingTrajectory trajectory = rating_trajectory(estimates);
    table << "final_mean\t" << trajectory.running_means.back() << "\n";
    if (trajectory.standard_error.has_value()) {
        table << "standard_error\t" << *trajectory.standard_error << "\n";
    } else {
        table << "standard_error\t(absent: single contest)\n";
    }

    if (out_path.empty()) {
        std::cout << table.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        out << table.str();
        std::cout << "trajectory written to " << out_path << "\n";
    }
    return 0;
}

struct StackConfig {
    std::filesystem::path data_dir = "artifacts/trainable_memory";
    std::filesystem::path graph_dir = "artifacts/solver_network/graph";
    std::string backend = "scripted";
    std::string scenario;
    std::string prompts;
    std::string endpoint = "http://127.0.0.1:8000";
    std::string model = "default";
    bool persist = false;
};

struct Stack {
    Sandbox sandbox;
    MemoryStore store;
    FamilyCatalog catalog;
    QmsGraph graph;
    EventBus bus;
    HashEmbedder embedder{64};
    std::unique_ptr<LlmPort> llm;
    PromptLibrary prompts;
    OrchestratorConfig config;

    explicit Stack(const StackConfig& options)
        : store(options.data_dir,
                options.backend == "scripted" ? fixed_clock() : MemoryStore::Clock{}) {
        store.load_all();
        const auto families_path = options.data_dir / "families.json";
        catalog = std::filesystem::exists(families_path) ? FamilyCatalog::load(families_path)
                                                         : FamilyCatalog::defaults();
        if (std::filesystem::exists(options.graph_dir / "nodes.json")) {
            graph = QmsGraph::load(options.graph_dir);
        }
        prompts = options.prompts.empty() ? PromptLibrary::defaults()
                                          : PromptLibrary::load_file(options.prompts);
        if (options.backend == "scripted") {
            if (options.scenario.empty()) {
                throw std::runtime_error("the scripted backend needs --scenario");
            }
            auto scripted = std::make_unique<ScriptedBackend>(
                ScriptedBackend::from_file(options.scenario));
            const auto& metadata = scripted->metadata();
            auto verdict = metadata.find("oracle_judge_verdict");
            if (verdict != metadata.end()) {
                config.injected_judge_verdict = judge_agreement_from_string(verdict->second);
            }
            llm = std::move(scripted);
        } else if (options.backend == "http") {
            HttpBackend::Config http;
            http.base_url = options.endpoint;
            http.model = options.model;
            llm = std::make_unique<HttpBackend>(http);
        } else {
            throw std::runtime_error("unknown backend: " + options.backend);
        }
        config.data_dir = options.data_dir;
        config.graph_dir = options.graph_dir;
        config.persist_stores = options.persist;
    }

    Orchestrator orchestrator() {
        return Orchestrator(sandbox, store, catalog, graph, bus, embedder, *llm, prompts, config);
    }
};

int cmd_solve(const StackConfig& options, const std::string& problem_path,
              const std::string& episode_out) {
    Stack stack(options);
    const ProblemRecord problem = load_problem(problem_path);
    Orchestrator orchestrator = stack.orchestrator();
    const EpisodeRecord record = orchestrator.run_problem(problem);
    std::cout << "problem " << record.problem_id << ": " << record.final_outcome
              << " (solver iterations " << record.solver_iterations << ", hack rounds "
              << record.hack_rounds << ", break writes " << record.break_namespace_writes
              << ")\n";
    if (!episode_out.empty()) {
        record.save(episode_out);
        std::cout << "episode record written to " << episode_out << "\n";
    }
    return record.final_outcome == "solved" ? 0 : 1;
}

int cmd_train(const StackConfig& options, const std::string& corpus_dir, int checkpoint_every) {
    Stack stack(options);
    std::vector<std::filesystem::path> problem_files;
    for (const auto& entry : std::filesystem::directory_iterator(corpus_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            problem_files.push_back(entry.path());
        }
    }
    std::sort(problem_files.begin(), problem_files.end());
    if (problem_files.empty()) {
        std::cerr << "no problem files in " << corpus_dir << "\n";
        return 1;
    }

    Orchestrator orchestrator = stack.orchestrator();
    int processed = 0;
    for (const auto& path : problem_files) {
        const ProblemRecord problem = load_problem(path);
        const auto result = orchestrator.training_rollout(problem);
        ++processed;
        std::cout << problem.id << ": delta_r=" << result.delta_r
                  << (result.weights_updated ? " (weights updated)" : "")
                  << (result.growth.empty() ? "" : " (graph grew)") << "\n";
        if (checkpoint_every > 0 && processed % checkpoint_every == 0) {
            stack.store.persist_all();
            std::filesystem::create_directories(options.data_dir);
            stack.catalog.save(options.data_dir / "families.json");
            stack.graph.save(options.graph_dir);
            std::cout << "checkpoint after " << processed << " problem(s)\n";
        }
    }
    stack.store.persist_all();
    std::filesystem::create_directories(options.data_dir);
    stack.catalog.save(options.data_dir / "families.json");
    stack.graph.save(options.graph_dir);
    std::cout << "trained on " << processed << " problem(s)\n";
    return 0;
}

int cmd_replay(const std::string& episode_path) {
    const EpisodeRecord record = EpisodeRecord::load(episode_path);
    const auto scratch =
        std::filesystem::temp_directory_path() / ("solvita-replay-" + record.problem_id);
    MemoryStore store(scratch, fixed_clock());
    FamilyCatalog catalog = FamilyCatalog::defaults();
    const std::string digest = replay_effects(record, store, catalog);
    std::cout << "episode " << record.problem_id << ": " << record.effects.size()
              << " effect(s), outcome " << record.final_outcome << "\n";
    if (digest == record.store_digest) {
        std::cout << "replay digest matches the recorded store state\n";
        return 0;
    }
    std::cout << "replay digest MISMATCH: recorded " << record.store_digest << ", replayed "
              << digest << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-loop program-synthesis engine"};
    app.require_subcommand(1);

    // memory inspect|sweep <ns>
    std::string memory_action, memory_ns;
    std::filesystem::path data_dir = "artifacts/trainable_memory";
    CLI::App* memory = app.add_subcommand("memory", "inspect or sweep a knowledge namespace");
    memory->add_option("action", memory_action, "inspect | sweep")->required();
    memory->add_option("namespace", memory_ns, "plan | solve | test | hack | oracle")->required();
    memory->add_option("--data-dir", data_dir, "store directory");

    // graph stats|export-dot
    std::string graph_action, graph_out;
    std::filesystem::path graph_dir = "artifacts/solver_network/graph";
    CLI::App* graph = app.add_subcommand("graph", "inspect the skill graph");
    graph->add_option("action", graph_action, "stats | export-dot")->required();
    graph->add_option("--graph-dir", graph_dir, "graph directory");
    graph->add_option("--out", graph_out, "output path for export-dot");

    // pipeline run
    std::string pipe_input, pipe_stage = "all", pipe_report, pipe_out, pipe_floors;
    std::uint64_t pipe_seed = 1;
    std::size_t pipe_cap = 2300;
    double pipe_delta = 0.93;
    CLI::App* pipeline = app.add_subcommand("pipeline", "corpus filtering pipeline");
    CLI::App* pipeline_run = pipeline->add_subcommand("run", "run filter stages");
    pipeline_run->add_option("--input", pipe_input, "newline-delimited records")->required();
    pipeline_run->add_option("--stage", pipe_stage, "all or 1..4");
    pipeline_run->add_option("--report", pipe_report, "filter report output path");
    pipeline_run->add_option("--out", pipe_out, "survivor records output path");
    pipeline_run->add_option("--seed", pipe_seed, "subsampling seed");
    pipeline_run->add_option("--cap", pipe_cap, "per-tag cap");
    pipeline_run->add_option("--delta", pipe_delta, "duplicate similarity threshold");
    pipeline_run->add_option("--floors", pipe_floors, "JSON file of per-tag floor overrides");

    // rate
    std::string rate_standings, rate_agent, rate_out;
    CLI::App* rate = app.add_subcommand("rate", "contest-local rating estimation");
    rate->add_option("--standings", rate_standings, "directory of contest standings")->required();
    rate->add_option("--agent", rate_agent, "agent tuples, one row per contest")->required();
    rate->add_option("--out", rate_out, "write the trajectory table here");

    // solve / train / replay
    StackConfig stack_options;
    std::string problem_path, episode_out;
    CLI::App* solve = app.add_subcommand("solve", "run the closed loop on one problem");
    solve->add_option("--problem", problem_path, "problem record JSON")->required();
    solve->add_option("--backend", stack_options.backend, "scripted | http");
    solve->add_option("--scenario", stack_options.scenario, "scripted scenario file");
    solve->add_option("--prompts", stack_options.prompts, "prompt template config file");
    solve->add_option("--endpoint", stack_options.endpoint, "http backend base url");
    solve->add_option("--model", stack_options.model, "http backend model name");
    solve->add_option("--data-dir", stack_options.data_dir, "store directory");
    solve->add_option("--graph-dir", stack_options.graph_dir, "graph directory");
    solve->add_option("--episode-out", episode_out, "write the episode record here");
    solve->add_flag("--persist", stack_options.persist, "persist stores at finalize");

    std::string corpus_dir;
    int checkpoint_every = 25;
    CLI::App* train = app.add_subcommand("train", "paired-rollout training over a corpus");
    train->add_option("--corpus", corpus_dir, "directory of problem JSON files")->required();
    train->add_option("--checkpoint-every", checkpoint_every, "persist every n problems");
    train->add_option("--backend", stack_options.backend, "scripted | http");
    train->add_option("--scenario", stack_options.scenario, "scripted scenario file");
    train->add_option("--prompts", stack_options.prompts, "prompt template config file");
    train->add_option("--endpoint", stack_options.endpoint, "http backend base url");
    train->add_option("--model", stack_options.model, "http backend model name");
    train->add_option("--data-dir", stack_options.data_dir, "store directory");
    train->add_option("--graph-dir", stack_options.graph_dir, "graph directory");

    std::string episode_path;
    CLI::App* replay = app.add_subcommand("replay", "verify an episode's store effects");
    replay->add_option("--episode", episode_path, "episode record JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (memory->parsed()) return cmd_memory(memory_action, memory_ns, data_dir);
        if (graph->parsed()) return cmd_graph(graph_action, graph_dir, graph_out);
        if (pipeline->parsed() && pipeline_run->parsed()) {
            return cmd_pipeline(pipe_input, pipe_stage, pipe_report, pipe_out, pipe_seed,
                                pipe_cap, pipe_delta, pipe_floors);
        }
        if (rate->parsed()) return cmd_rate(rate_standings, rate_agent, rate_out);
        if (solve->parsed()) return cmd_solve(stack_options, problem_path, episode_out);
        if (train->parsed()) return cmd_train(stack_options, corpus_dir, checkpoint_every);
        if (replay->parsed()) return cmd_replay(episode_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand executed\n";
    return 2;
}
