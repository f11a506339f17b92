// Acceptance suite: one self-contained check per criterion, each printing a
// single pass/fail line. Everything runs against the scripted backend, the
// deterministic hash embedder, and the local compiler toolchain.

#include "solvita/data_pipeline.hpp"
#include "solvita/hacker.hpp"
#include "solvita/memory_store.hpp"
#include "solvita/oracle.hpp"
#include "solvita/orchestrator.hpp"
#include "solvita/patch_engine.hpp"
#include "solvita/qms_graph.hpp"
#include "solvita/rating.hpp"

#include "support/golden.hpp"
#include "support/test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace solvita;

namespace {

struct Check {
    bool ok = true;
    std::vector<std::string> failures;

    void require(bool condition, const std::string& message) {
        if (!condition) {
            ok = false;
            failures.push_back(message);
        }
    }
    void close(double expected, double actual, double tolerance, const std::string& label) {
        if (std::abs(expected - actual) > tolerance) {
            std::ostringstream message;
            message << label << ": expected " << expected << ", got " << actual
                    << " (tolerance " << tolerance << ")";
            require(false, message.str());
        }
    }
};

Verdict verdict_of(VerdictKind kind) {
    Verdict v;
    v.kind = kind;
    return v;
}

// --- criterion 1: reward arithmetic goldens -------------------------------

void criterion_reward_goldens(Check& check) {
    RoundVerdicts worked;
    for (int i = 0; i < 10; ++i) worked.all.push_back(verdict_of(VerdictKind::AC));
    for (int i = 0; i < 8; ++i) worked.valid.push_back(verdict_of(VerdictKind::AC));
    worked.breaks = {verdict_of(VerdictKind::WA), verdict_of(VerdictKind::TLE),
                     verdict_of(VerdictKind::WA), verdict_of(VerdictKind::RE)};
    worked.compile_failures = 0;
    check.close(0.59125, hack_reward(worked), 1e-12, "hack reward worked example");

    RoundVerdicts degenerate;
    degenerate.generation_failure = true;
    degenerate.compile_failures = 2;
    check.close(-0.8, hack_reward(degenerate), 1e-12, "degenerate round with c=2");

    check.close(-1.0, Oracle::reward(0.0, JudgeAgreement::none, OracleFailure::crash), 1e-12,
                "oracle crash penalty");
    check.close(1.0, Oracle::reward(1.0, JudgeAgreement::agree, OracleFailure::none), 1e-12,
                "full certification with judge agreement");

    check.close(0.50, severity(VerdictKind::WA), 1e-12, "WA severity");
    check.close(0.65, severity(VerdictKind::TLE), 1e-12, "TLE severity");
    check.close(0.75, severity(VerdictKind::MLE), 1e-12, "MLE severity");
    check.close(0.85, severity(VerdictKind::RE), 1e-12, "RE severity");
    check.close(1.00, severity(VerdictKind::crash), 1e-12, "crash severity");
}

// --- criterion 2: REINFORCE gradient vs finite differences ----------------

void criterion_qms_gradient(Check& check) {
    QmsGraph graph;
    auto unit = [](std::initializer_list<double> values) {
        Embedding v(values);
        normalize_in_place(v);
        return v;
    };
    graph.add_query({"q1", "first", {}, unit({1, 0, 0, 0})});
    graph.add_query({"q2", "second", {}, unit({0.6, 0.8, 0, 0})});
    graph.add_method({"m1", MethodKind::analysis, {}, "", "", ""});
    graph.add_method({"m2", MethodKind::analysis, {}, "", "", ""});
    graph.add_skill({"s1", "one", "d", "x", {}});
    graph.add_skill({"s2", "two", "d", "x", {}});
    graph.add_skill({"s3", "three", "d", "x", {}});
    graph.set_qm_weight("q1", "m1", 0.7);
    graph.set_qm_weight("q1", "m2", 0.4);
    graph.set_qm_weight("q2", "m1", 0.2);
    graph.set_qm_weight("q2", "m2", 0.9);
    graph.set_ms_weight("m1", "s1", 0.5);
    graph.set_ms_weight("m1", "s2", 0.5);
    graph.set_ms_weight("m2", "s2", 0.3);
    graph.set_ms_weight("m2", "s3", 0.7);
    graph.validate();

    const QueryNode q_new{"q-new", "probe", {}, unit({0.9, 0.1, 0, 0})};
    const double temperature = 0.2;
    const std::size_t k_q = 4;
    const auto scores = graph.skill_scores(q_new, k_q);
    const auto sampled = graph.sample_skills(scores, temperature, 2, 991);
    check.require(sampled.skills.size() == 2, "seeded sample should draw two skills");

    const auto grad = graph.logprob_gradient(sampled.skills, q_new, k_q, temperature);
    const double h = 1e-5;
    double max_error = 0.0;
    for (const auto& [q, m] :
         {std::pair<std::string, std::string>{"q1", "m1"}, {"q1", "m2"}, {"q2", "m1"},
          {"q2", "m2"}}) {
        const double w0 = graph.qm_weight(q, m);
        graph.set_qm_weight(q, m, w0 + h);
        const double up = graph.sequence_log_prob(sampled.skills, q_new, k_q, temperature);
        graph.set_qm_weight(q, m, w0 - h);
        const double down = graph.sequence_log_prob(sampled.skills, q_new, k_q, temperature);
        graph.set_qm_weight(q, m, w0);
        const double analytic = grad.qm.count({q, m}) ? grad.qm.at({q, m}) : 0.0;
        max_error = std::max(max_error, std::abs((up - down) / (2 * h) - analytic));
    }
    for (const auto& [m, s] :
         {std::pair<std::string, std::string>{"m1", "s1"}, {"m1", "s2"}, {"m2", "s2"},
          {"m2", "s3"}}) {
        const double w0 = graph.ms_weight(m, s);
        graph.set_ms_weight(m, s, w0 + h);
        const double up = graph.sequence_log_prob(sampled.skills, q_new, k_q, temperature);
        graph.set_ms_weight(m, s, w0 - h);
        const double down = graph.sequence_log_prob(sampled.skills, q_new, k_q, temperature);
        graph.set_ms_weight(m, s, w0);
        const double analytic = grad.ms.count({m, s}) ? grad.ms.at({m, s}) : 0.0;
        max_error = std::max(max_error, std::abs((up - down) / (2 * h) - analytic));
    }
    check.require(max_error < 1e-6,
                  "max gradient component error " + std::to_string(max_error) + " >= 1e-6");

    // 1000 random policy-gradient updates must keep every MS group on the
    // unit simplex.
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> reward(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto step_scores = graph.skill_scores(q_new, k_q);
        const auto step_sample = graph.sample_skills(step_scores, temperature, 2, 7000 + i);
        graph.reinforce_update(step_sample, q_new, reward(rng), 0.05);
    }
    for (const char* m : {"m1", "m2"}) {
        double sum = 0.0;
        for (const char* s : {"s1", "s2", "s3"}) {
            sum += graph.ms_weight(m, s);
        }
        check.require(std::abs(sum - 1.0) <= 1e-9,
                      std::string("ms group ") + m + " sums to " + std::to_string(sum));
    }
}

// --- criterion 3: bandit convergence and deprecation -----------------------

void criterion_bandit_convergence(Check& check) {
    solvita::test::TempDir dir;
    MemoryStore store(dir.path, [] { return std::int64_t{0}; });
    BanditContext ctx;
    ctx.active_keys = {fsm_key("SOLVE_DRAFT"), tag_key("dp")};
    ctx.problem_tags = {"dp"};

    MemoryItem a;
    a.id = "A";
    a.ns = MemoryNamespace::solve;
    a.summary = "helpful";
    MemoryItem b = a;
    b.id = "B";
    b.summary = "harmful";
    store.add(a);
    store.add(b);

    int greedy_a_last_100 = 0;
    for (int round = 1; round <= 1000; ++round) {
        const auto picked = store.select_advice(MemoryNamespace::solve, ctx, 1, 0.1,
                                                static_cast<std::uint64_t>(round));
        if (!picked.empty()) {
            const double reward = picked[0].id == "A" ? 0.8 : -0.8;
            store.apply_reward(MemoryNamespace::solve, picked[0].id, reward, ctx);
        }
        const auto greedy = store.select_advice(MemoryNamespace::solve, ctx, 1, 0.0,
                                                static_cast<std::uint64_t>(100000 + round));
        if (round > 900 && !greedy.empty() && greedy[0].id == "A") {
            ++greedy_a_last_100;
        }
    }
    check.require(greedy_a_last_100 >= 95,
                  "greedy picked A only " + std::to_string(greedy_a_last_100) +
                      "/100 times in the last 100 rounds");

    const MemoryItem b_final = *store.get(MemoryNamespace::solve, "B");
    check.require(b_final.use_count >= 20,
                  "exploration gave B only " + std::to_string(b_final.use_count) + " uses");
    check.require(b_final.avg_reward < -0.3, "B's average reward should sit below -0.3");
    store.deprecation_sweep(MemoryNamespace::solve);
    check.require(store.get(MemoryNamespace::solve, "B")->deprecated,
                  "B must be deprecated after the sweep");
    check.require(!store.get(MemoryNamespace::solve, "A")->deprecated,
                  "A must stay active after the sweep");
}

// --- criterion 4: Elo inversion -------------------------------------------

void criterion_elo_inversion(Check& check) {
    std::mt19937_64 rng(512);
    std::uniform_int_distribution<int> field(2, 250);
    std::uniform_real_distribution<double> rating(800, 3500);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> ratings(static_cast<std::size_t>(field(rng)));
        for (double& r : ratings) r = rating(rng);
        std::uniform_int_distribution<std::size_t> rank(2, ratings.size());
        const RatingEstimate estimate = invert_rating(rank(rng), ratings);
        check.require(std::abs(estimate.residual) < 1e-6,
                      "bisection residual " + std::to_string(estimate.residual) + " >= 1e-6");
    }

    const RatingEstimate symmetric = invert_rating(2, {1500, 1500});
    check.close(1500.0, symmetric.rating, 1e-4, "symmetric two-human field");

    for (std::size_t n = 1; n <= 20; ++n) {
        std::vector<double> ratings(n);
        for (double& r : ratings) r = rating(rng);
        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m <= n + 1; ++m) {
            const double value = invert_rating(m, ratings).rating;
            check.require(value <= previous + 1e-9,
                          "estimate increased with rank at |H|=" + std::to_string(n));
            previous = value;
        }
    }
}

// --- criterion 5: scaled pipeline fixture against the reference ratios -----

struct FixtureSpec {
    // Reference per-stage survivor counts for the full-size corpus.
    static constexpr double kRaw = 30018, kComplete = 24712, kBalanced = 19486,
                            kDeduped = 16503, kPruned = 8017;
};

std::vector<ProblemRecord> build_scaled_corpus(PipelineConfig& config) {
    std::vector<ProblemRecord> records;
    std::set<std::string> all_tags;

    auto add = [&](std::string id, Platform platform, std::string native,
                   std::set<std::string> tags, std::string statement, int submissions,
                   bool complete_record) {
        ProblemRecord record;
        record.id = std::move(id);
        record.platform = platform;
        record.statement = std::move(statement);
        record.constraints = {{"n", "1..1000"}};
        record.public_tests = {{"1\n", "1\n"}};
        if (complete_record) {
            record.hidden_tests = {{"2\n", "2\n"}};
        }
        record.tags = tags;
        record.native_difficulty = std::move(native);
        record.submissions.assign(static_cast<std::size_t>(submissions), {"AC", 10.0});
        for (const auto& tag : tags) all_tags.insert(tag);
        records.push_back(std::move(record));
    };

    // Incomplete mass, concentrated on the long-tail platforms.
    const std::pair<Platform, int> incomplete[] = {{Platform::codeforces, 8},
                                                   {Platform::atcoder, 5},
                                                   {Platform::aizu, 3},
                                                   {Platform::leetcode, 117}};
    int counter = 0;
    for (const auto& [platform, count] : incomplete) {
        for (int i = 0; i < count; ++i) {
            add("inc-" + std::to_string(counter), platform, "1900", {"misc"},
                "incomplete statement " + std::to_string(counter), 1, false);
            ++counter;
        }
    }

    // Over-cap easy groups: the balance stage trims them to the cap and the
    // difficulty floor later removes the survivors.
    const std::tuple<const char*, const char*, int> groups[] = {
        {"implementation", "g1", 128}, {"math", "g2", 86}, {"greedy", "g3", 90}};
    for (const auto& [tag, prefix, count] : groups) {
        for (int i = 0; i < count; ++i) {
            add(std::string(prefix) + "-" + std::to_string(i), Platform::codeforces, "800", {tag},
                std::string("easy ") + tag + " problem " + std::to_string(i), 2, true);
        }
    }
    // Hard keepers under two below-cap tags.
    for (int i = 0; i < 43; ++i) {
        add("dp-" + std::to_string(i), Platform::codeforces, "2000", {"dp"},
            "hard dp problem " + std::to_string(i), 4, true);
    }
    for (int i = 0; i < 42; ++i) {
        add("ds-" + std::to_string(i), Platform::codeforces, "2000", {"data_structures"},
            "hard data structure problem " + std::to_string(i), 4, true);
    }

    // Duplicate pairs: one statement, two records, the stronger variant
    // carries more submissions. 39 of the 75 surviving variants sit below the
    // floor; 36 clear it.
    int pair_index = 0;
    auto add_pairs = [&](Platform platform, int dropped_count, const char* dropped_native,
                         int kept_count, const char* kept_native) {
        for (int i = 0; i < dropped_count + kept_count; ++i) {
            const bool kept = i >= dropped_count;
            const std::string tag = "pair_" + std::to_string(pair_index);
            const std::string statement = "shared duplicate statement " +
                                          std::to_string(pair_index);
            add("pair-" + std::to_string(pair_index) + "-strong", platform,
                kept ? kept_native : dropped_native, {tag}, statement, 12, true);
            add("pair-" + std::to_string(pair_index) + "-weak", platform,
                kept ? kept_native : dropped_native, {tag}, statement, 3, true);
            ++pair_index;
        }
    };
    add_pairs(Platform::atcoder, 13, "ABC-A", 12, "ABC-G");
    add_pairs(Platform::aizu, 13, "800", 11, "2000");
    add_pairs(Platform::leetcode, 13, "Easy", 13, "Hard");

    // Unique long-tail keepers.
    for (int i = 0; i < 50; ++i) {
        add("at-" + std::to_string(i), Platform::atcoder, "ABC-G", {"at_misc"},
            "atcoder single " + std::to_string(i), 2, true);
    }
    for (int i = 0; i < 15; ++i) {
        add("az-" + std::to_string(i), Platform::aizu, "2000", {"az_misc"},
            "aizu single " + std::to_string(i), 2, true);
    }
    for (int i = 0; i < 14; ++i) {
        add("ot-" + std::to_string(i), Platform::leetcode, "Hard", {"ot_misc"},
            "leetcode single " + std::to_string(i), 2, true);
    }

    for (const std::string& tag : all_tags) {
        config.floor_overrides[tag] = 1600;
    }
    return records;
}

void criterion_pipeline_fixture(Check& check) {
    PipelineConfig config;
    config.tag_cap = 58; // 2300 at 1/40 scale
    config.duplicate_threshold = 0.93;
    config.rng_seed = 1;

    const std::vector<ProblemRecord> corpus = build_scaled_corpus(config);
    HashEmbedder embedder(64);
    DataPipeline pipeline(embedder, config);

    const auto first = pipeline.run(corpus);
    const auto second = pipeline.run(corpus);

    check.require(first.report.stages.size() == 4, "four stages must run");
    for (std::size_t i = 0; i + 1 < first.report.stages.size(); ++i) {
        check.require(first.report.stages[i].records_out ==
                          first.report.stages[i + 1].records_in,
                      "stage counts must telescope");
    }
    const double reference_ratios[4] = {
        FixtureSpec::kComplete / FixtureSpec::kRaw,
        FixtureSpec::kBalanced / FixtureSpec::kComplete,
        FixtureSpec::kDeduped / FixtureSpec::kBalanced,
        FixtureSpec::kPruned / FixtureSpec::kDeduped,
    };
    for (std::size_t i = 0; i < 4; ++i) {
        const StageReport& stage = first.report.stages[i];
        const double ratio =
            static_cast<double>(stage.records_out) / static_cast<double>(stage.records_in);
        check.close(reference_ratios[i], ratio, 0.02,
                    "stage '" + stage.stage + "' survival ratio");
    }
    check.require(first.survivors.size() == second.survivors.size(),
                  "two runs must keep the same number of records");
    for (std::size_t i = 0; i < first.survivors.size(); ++i) {
        check.require(first.survivors[i].id == second.survivors[i].id,
                      "two runs must keep identical survivor ids");
    }
}

// --- criterion 6: patch engine byte-exactness and atomicity ----------------

void criterion_patch_engine(Check& check) {
    const std::string example_patch =
        "<<<<<<< SEARCH\n"
        "    for (int i = 1; i <= n; i++) {\n"
        "        sum += arr[i];\n"
        "    }\n"
        "=======\n"
        "    for (int i = 0; i < n; i++) {\n"
        "        sum += arr[i];\n"
        "    }\n"
        ">>>>>>> REPLACE\n";
    auto blocks = parse_patch(example_patch);
    check.require(blocks.size() == 1, "the example patch holds one block");
    const std::string source = "int sum = 0;\n"
                               "    for (int i = 1; i <= n; i++) {\n"
                               "        sum += arr[i];\n"
                               "    }\n";
    const std::string expected = "int sum = 0;\n"
                                 "    for (int i = 0; i < n; i++) {\n"
                                 "        sum += arr[i];\n"
                                 "    }\n";
    check.require(apply_patch(source, blocks) == expected,
                  "the example block must apply byte-exactly");

    std::mt19937_64 rng(314159);
    std::uniform_int_distribution<int> letter('a', 'd');
    std::uniform_int_distribution<int> source_len(4, 80);
    std::uniform_int_distribution<int> needle_len(1, 4);
    int exercised_failures = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::string text;
        const int n = source_len(rng);
        for (int i = 0; i < n; ++i) text.push_back(static_cast<char>(letter(rng)));
        std::string needle;
        const int k = needle_len(rng);
        for (int i = 0; i < k; ++i) needle.push_back(static_cast<char>(letter(rng)));

        std::vector<EditBlock> blocks_fuzz = {{needle, "XX", 0, 0}};
        const std::string snapshot = text;
        try {
            (void)apply_patch(text, blocks_fuzz);
        } catch (const PatchApplyError&) {
            ++exercised_failures;
            if (text != snapshot) {
                check.require(false, "a failed patch mutated its input");
                return;
            }
        }
    }
    check.require(exercised_failures > 1000,
                  "the fuzz should hit no-match and ambiguity paths often");
}

// --- criterion 7: scripted end-to-end episodes -----------------------------

struct EpisodeRun {
    EpisodeRecord record;
    std::string note;
};

EpisodeRun run_scenario(const solvita::test::GoldenScenario& scenario,
                        const std::filesystem::path& root) {
    Sandbox sandbox(root / "sandbox");
    MemoryStore store(root / "memory", solvita::test::fixed_clock());
    FamilyCatalog catalog = FamilyCatalog::defaults();
    QmsGraph graph;
    EventBus bus;
    HashEmbedder embedder(32);
    ScriptedBackend backend(scenario.steps, scenario.metadata);
    Orchestrator orchestrator(sandbox, store, catalog, graph, bus, embedder, backend,
                              PromptLibrary::defaults(), solvita::test::golden_config());
    EpisodeRun run;
    run.record = orchestrator.run_problem(scenario.problem);
    if (backend.remaining() != 0) {
        run.note = "scenario left " + std::to_string(backend.remaining()) + " unconsumed steps";
    }
    return run;
}

void criterion_scripted_episodes(Check& check) {
    solvita::test::TempDir root;

    // Scenario A: clean pass.
    const auto clean = run_scenario(solvita::test::golden_clean_pass(), root.path / "clean");
    check.require(clean.note.empty(), clean.note);
    check.require(clean.record.final_outcome == "solved", "clean scenario must solve");
    check.require(clean.record.solver_iterations == 1, "clean scenario uses one iteration");
    check.require(clean.record.hack_rounds <= 3, "hack budget respected");
    check.require(clean.record.break_namespace_writes == 0, "no break events expected");

    // Replay determinism: running the same scenario again produces an
    // identical record, and replaying its effects reproduces the store state.
    const auto clean_again =
        run_scenario(solvita::test::golden_clean_pass(), root.path / "clean2");
    check.require(clean.record.canonical_json() == clean_again.record.canonical_json(),
                  "two scripted runs must produce identical episode records");
    {
        MemoryStore fresh(root.path / "replay", solvita::test::fixed_clock());
        FamilyCatalog fresh_catalog = FamilyCatalog::defaults();
        check.require(replay_effects(clean.record, fresh, fresh_catalog) ==
                          clean.record.store_digest,
                      "replaying the clean episode must reproduce the store digest");
    }

    // Scenario B: WA draft fixed by one accepted patch.
    const auto patched = run_scenario(solvita::test::golden_patch_fix(), root.path / "patch");
    check.require(patched.note.empty(), patched.note);
    check.require(patched.record.final_outcome == "solved", "patch scenario must solve");
    check.require(patched.record.solver_iterations == 2,
                  "patch scenario runs draft plus one patch iteration");
    bool gate_accept_recorded = false;
    for (const PhaseLog& phase : patched.record.phases) {
        if (phase.phase == "SOLVE_PATCH" &&
            phase.note.find("\"accepted\":true") != std::string::npos) {
            gate_accept_recorded = true;
        }
    }
    check.require(gate_accept_recorded, "the regression-gate acceptance must be recorded");
    {
        MemoryStore fresh(root.path / "replay-b", solvita::test::fixed_clock());
        FamilyCatalog fresh_catalog = FamilyCatalog::defaults();
        check.require(replay_effects(patched.record, fresh, fresh_catalog) ==
                          patched.record.store_digest,
                      "replaying the patch episode must reproduce the store digest");
    }

    // Scenario C: a hack break propagates to all four namespaces, the patch
    // fixes it, and budgets hold.
    const auto hacked = run_scenario(solvita::test::golden_hack_break(), root.path / "hack");
    check.require(hacked.note.empty(), hacked.note);
    check.require(hacked.record.final_outcome == "solved", "hack scenario must end solved");
    check.require(hacked.record.solver_iterations <= 8, "solver budget respected");
    check.require(hacked.record.hack_rounds <= 3, "hack budget respected");
    check.require(hacked.record.break_namespace_writes == 4,
                  "one break must fan out to exactly four namespace writes, saw " +
                      std::to_string(hacked.record.break_namespace_writes));
    {
        MemoryStore fresh(root.path / "replay-c", solvita::test::fixed_clock());
        FamilyCatalog fresh_catalog = FamilyCatalog::defaults();
        check.require(replay_effects(hacked.record, fresh, fresh_catalog) ==
                          hacked.record.store_digest,
                      "replaying the hack episode must reproduce the store digest");
    }
}

// --- criterion 8: judge priority and token invariance ----------------------

void criterion_judge_priority(Check& check) {
    solvita::test::TempDir dir;
    Sandbox sandbox(dir.path);
    ToolchainConfig toolchain;
    toolchain.command_template = "g++ -std=c++17 -O0 -o {output} {source}";

    SupervisionArtifact artifact;
    artifact.checker_src = R"cpp(#include <cstdio>
#include <cstdlib>
int main(int argc, char** argv) {
    if (argc < 3) return 2;
    FILE* in = std::fopen(argv[1], "rb");
    FILE* out = std::fopen(argv[2], "rb");
    if (in == nullptr || out == nullptr) return 2;
    long a = 0, b = 0, got = 0;
    if (std::fscanf(in, "%ld %ld", &a, &b) != 2) return 1;
    if (std::fscanf(out, "%ld", &got) != 1) return 1;
    return got == a + b ? 0 : 1;
}
)cpp";
    artifact.solver_src = solvita::test::reference_solver_source();
    artifact.inputs = {"1 1\n"};
    artifact.expected_outputs = {"2\n"};
    JudgeContext judge = JudgeContext::from_artifact(artifact, sandbox, toolchain);

    CompileResult candidate = sandbox.compile(solvita::test::correct_solution(), toolchain);
    check.require(candidate.ok(), "the candidate must compile");

    std::mt19937_64 rng(64);
    std::uniform_int_distribution<long> value(-1000000, 1000000);
    for (int i = 0; i < 50; ++i) {
        const long a = value(rng);
        const long b = value(rng);
        const std::string input = std::to_string(a) + " " + std::to_string(b) + "\n";
        const Verdict verdict = resolve_judgement(input, *candidate.binary, judge, sandbox, {});
        check.require(verdict.judge_source == JudgeSource::checker,
                      "with a checker available every verdict must come from it");
        check.require(verdict.kind == VerdictKind::AC, "the correct candidate must pass");
    }

    std::uniform_int_distribution<int> token_count(1, 10);
    std::uniform_int_distribution<int> token_len(1, 8);
    std::uniform_int_distribution<int> ws(0, 3);
    std::uniform_int_distribution<int> letter('0', '9');
    const char* whitespace[] = {" ", "\t", "\n", " \t\n"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> tokens(static_cast<std::size_t>(token_count(rng)));
        for (auto& token : tokens) {
            const int len = token_len(rng);
            for (int i = 0; i < len; ++i) token.push_back(static_cast<char>(letter(rng)));
        }
        auto render = [&] {
            std::string out;
            for (const auto& token : tokens) {
                out += token;
                out += whitespace[ws(rng)];
            }
            return out;
        };
        if (!token_streams_equal(render(), render())) {
            check.require(false, "token comparison broke under whitespace re-rendering");
            return;
        }
    }
}

struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> body;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "reward arithmetic goldens", criterion_reward_goldens},
        {2, "policy-gradient check against finite differences", criterion_qms_gradient},
        {3, "bandit convergence and deprecation", criterion_bandit_convergence},
        {4, "contest rating inversion", criterion_elo_inversion},
        {5, "scaled corpus pipeline ratios", criterion_pipeline_fixture},
        {6, "patch engine byte-exactness and atomicity", criterion_patch_engine},
        {7, "scripted end-to-end episodes", criterion_scripted_episodes},
        {8, "judge priority and token invariance", criterion_judge_priority},
    };

    int failed = 0;
    for (const Criterion& criterion : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.body(check);
        } catch (const std::exception& e) {
            check.require(false, std::string("unhandled exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %d: %s (%.2fs)\n", check.ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, elapsed);
        if (!check.ok) {
            ++failed;
            for (const std::string& failure : check.failures) {
                std::printf("       - %s\n", failure.c_str());
            }
        }
    }
    if (failed != 0) {
        std::printf("%d of %zu criteria failed\n", failed, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
