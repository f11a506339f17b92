#include "solvita/judge.hpp"
#include "solvita/sandbox.hpp"

#include "support/test_util.hpp"

#include <doctest.h>

#include <csignal>
#include <fstream>
#include <random>

using namespace solvita;

namespace {

ToolchainConfig fast_toolchain() {
    ToolchainConfig config;
    config.command_template = "g++ -std=c++17 -O0 -o {output} {source}";
    return config;
}

const char* kEcho = R"cpp(#include <cstdio>
int main() {
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, stdin)) > 0) fwrite(buf, 1, n, stdout);
    return 0;
}
)cpp";

} // namespace

TEST_CASE("compile and run a well-formed program") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult result = sandbox.compile(kEcho, fast_toolchain());
    REQUIRE(result.ok());

    RawOutcome outcome = sandbox.execute(*result.binary, "hello sandbox\n", {});
    CHECK(outcome.ran_clean());
    CHECK(outcome.stdout_bytes == "hello sandbox\n");
    CHECK(classify_outcome(outcome).kind == VerdictKind::AC);
}

TEST_CASE("a syntax error produces compile_fail with a diagnostic") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult result = sandbox.compile("int main( { broken", fast_toolchain());
    REQUIRE_FALSE(result.ok());
    CHECK(result.failure->kind == VerdictKind::compile_fail);
    CHECK_FALSE(result.failure->diagnostic.empty());
}

TEST_CASE("identical source compiles to an identical classification") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult first = sandbox.compile(kEcho, fast_toolchain());
    CompileResult second = sandbox.compile(kEcho, fast_toolchain());
    CHECK(first.ok() == second.ok());
    RawOutcome a = sandbox.execute(*first.binary, "x", {});
    RawOutcome b = sandbox.execute(*second.binary, "x", {});
    CHECK(classify_outcome(a).kind == classify_outcome(b).kind);
    CHECK(a.stdout_bytes == b.stdout_bytes);
}

TEST_CASE("a missing toolchain is a configuration error, not a verdict") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    ToolchainConfig broken;
    broken.command_template = "no-such-compiler-entirely -o {output} {source}";
    CHECK_THROWS_AS(sandbox.compile(kEcho, broken), ToolchainError);
}

TEST_CASE("an infinite loop is killed at the wall limit") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult loop = sandbox.compile(R"cpp(int main() { for (;;) {} }
)cpp",
                                         fast_toolchain());
    REQUIRE(loop.ok());
    ExecutionLimits limits;
    limits.cpu_seconds = 5.0;
    limits.wall_seconds = 0.2;
    RawOutcome outcome = sandbox.execute(*loop.binary, "", limits);
    CHECK(outcome.limit_hit == LimitHit::time);
    CHECK(outcome.elapsed_seconds < 2.0); // 0.2 s limit plus scheduler slack
    CHECK(classify_outcome(outcome).kind == VerdictKind::TLE);
}

TEST_CASE("an allocation loop hits the memory ceiling") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult hog = sandbox.compile(R"cpp(#include <cstring>
#include <vector>
int main() {
    std::vector<char*> chunks;
    for (;;) {
        char* chunk = new char[1 << 20];
        std::memset(chunk, 1, 1 << 20); // touch the pages
        chunks.push_back(chunk);
    }
}
)cpp",
                                        fast_toolchain());
    REQUIRE(hog.ok());
    ExecutionLimits limits;
    limits.memory_bytes = 64ull * 1024 * 1024;
    limits.wall_seconds = 10.0;
    RawOutcome outcome = sandbox.execute(*hog.binary, "", limits);
    CHECK(outcome.limit_hit == LimitHit::memory);
    CHECK(classify_outcome(outcome).kind == VerdictKind::MLE);
}

TEST_CASE("nonzero exits classify as RE and fatal signals as crash") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult re = sandbox.compile("int main() { return 3; }\n", fast_toolchain());
    REQUIRE(re.ok());
    CHECK(classify_outcome(sandbox.execute(*re.binary, "", {})).kind == VerdictKind::RE);

    CompileResult crash = sandbox.compile(R"cpp(#include <csignal>
int main() { raise(SIGSEGV); }
)cpp",
                                          fast_toolchain());
    REQUIRE(crash.ok());
    CHECK(classify_outcome(sandbox.execute(*crash.binary, "", {})).kind == VerdictKind::crash);
}

TEST_CASE("stdout is truncated at the configured cap") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult chatty = sandbox.compile(R"cpp(#include <cstdio>
int main() {
    for (int i = 0; i < 3000; ++i) std::printf("0123456789");
    return 0;
}
)cpp",
                                           fast_toolchain());
    REQUIRE(chatty.ok());
    ExecutionLimits limits;
    limits.output_cap_bytes = 1024;
    RawOutcome outcome = sandbox.execute(*chatty.binary, "", limits);
    CHECK(outcome.stdout_truncated);
    CHECK(outcome.stdout_bytes.size() == 1024);
}

TEST_CASE("no child outlives its job") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult forker = sandbox.compile(R"cpp(#include <cstdio>
#include <unistd.h>
int main() {
    pid_t child = fork();
    if (child == 0) {
        sleep(30);
        return 0;
    }
    std::printf("%d\n", (int)child);
    return 0;
}
)cpp",
                                           fast_toolchain());
    REQUIRE(forker.ok());
    RawOutcome outcome = sandbox.execute(*forker.binary, "", {});
    REQUIRE(outcome.ran_clean());
    const pid_t grandchild = static_cast<pid_t>(std::stol(outcome.stdout_bytes));
    // The whole process group is swept when the job is reaped; within a
    // second the grandchild must be dead (a zombie awaiting reaping by init
    // counts as dead).
    auto dead = [&] {
        std::ifstream stat("/proc/" + std::to_string(grandchild) + "/stat");
        if (!stat) return true;
        std::string content((std::istreambuf_iterator<char>(stat)),
                            std::istreambuf_iterator<char>());
        const std::size_t paren = content.rfind(')');
        return paren != std::string::npos && paren + 2 < content.size() &&
               content[paren + 2] == 'Z';
    };
    bool gone = false;
    for (int i = 0; i < 100; ++i) {
        if (dead()) {
            gone = true;
            break;
        }
        ::usleep(10000);
    }
    CHECK(gone);
}

TEST_CASE("token comparison ignores whitespace structure but not content") {
    CHECK(token_streams_equal("1 2\n3", "1 2 3"));
    CHECK(token_streams_equal("a\tb", " a  b \n"));
    CHECK_FALSE(token_streams_equal("1 2 3", "1 2"));
    CHECK_FALSE(token_streams_equal("12 3", "1 23"));
    CHECK(token_streams_equal("", "  \n\t "));

    // Fuzz: re-rendering the same tokens with random whitespace never
    // changes equality.
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> token_count(1, 12);
    std::uniform_int_distribution<int> token_len(1, 6);
    std::uniform_int_distribution<int> ws_pick(0, 3);
    std::uniform_int_distribution<int> letter('a', 'z');
    const char* whitespace[] = {" ", "\t", "\n", "  \n"};
    for (int trial = 0; trial < 500; ++trial) {
        const int n = token_count(rng);
        std::vector<std::string> tokens(static_cast<std::size_t>(n));
        for (auto& token : tokens) {
            const int len = token_len(rng);
            for (int i = 0; i < len; ++i) token.push_back(static_cast<char>(letter(rng)));
        }
        auto render = [&] {
            std::string out = ws_pick(rng) == 0 ? std::string(whitespace[ws_pick(rng)]) : "";
            for (const auto& token : tokens) {
                out += token;
                out += whitespace[ws_pick(rng)];
            }
            return out;
        };
        CHECK(token_streams_equal(render(), render()));
    }
}

TEST_CASE("trailing newline normalization strips only trailing CR/LF") {
    CHECK(normalize_trailing_newlines("abc\n") == "abc");
    CHECK(normalize_trailing_newlines("abc\r\n\r\n") == "abc");
    CHECK(normalize_trailing_newlines("a\nb") == "a\nb");
    CHECK(normalize_trailing_newlines("abc  ") == "abc  ");
}

TEST_CASE("judge priority is strict: checker first, then reference, then exact") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    const ToolchainConfig toolchain = fast_toolchain();

    // Checker accepts everything; reference would reject; exact would reject.
    const char* kYesChecker = R"cpp(int main() { return 0; }
)cpp";
    const char* kDoubler = R"cpp(#include <cstdio>
int main() { long x; std::scanf("%ld", &x); std::printf("%ld\n", 2 * x); return 0; }
)cpp";

    SUBCASE("checker wins even when bytes differ from the stored output") {
        SupervisionArtifact artifact;
        artifact.checker_src = kYesChecker;
        artifact.solver_src = kDoubler;
        artifact.inputs = {"5\n"};
        artifact.expected_outputs = {"10\n"};
        JudgeContext judge = JudgeContext::from_artifact(artifact, sandbox, toolchain);
        Verdict verdict = judge.judge("5\n", "definitely not ten", sandbox, {});
        CHECK(verdict.kind == VerdictKind::AC);
        CHECK(verdict.judge_source == JudgeSource::checker);
    }
    SUBCASE("a rejecting checker yields WA via the checker") {
        SupervisionArtifact artifact;
        artifact.checker_src = R"cpp(int main() { return 1; }
)cpp";
        JudgeContext judge = JudgeContext::from_artifact(artifact, sandbox, toolchain);
        Verdict verdict = judge.judge("5\n", "10\n", sandbox, {});
        CHECK(verdict.kind == VerdictKind::WA);
        CHECK(verdict.judge_source == JudgeSource::checker);
    }
    SUBCASE("without a checker the reference compares token streams") {
        SupervisionArtifact artifact;
        artifact.solver_src = kDoubler;
        JudgeContext judge = JudgeContext::from_artifact(artifact, sandbox, toolchain);
        Verdict ok = judge.judge("5\n", " 10 \n", sandbox, {});
        CHECK(ok.kind == VerdictKind::AC);
        CHECK(ok.judge_source == JudgeSource::reference);
        Verdict bad = judge.judge("5\n", "11\n", sandbox, {});
        CHECK(bad.kind == VerdictKind::WA);
    }
    SUBCASE("with only stored outputs the exact judge decides") {
        JudgeContext judge;
        judge.add_expected("5\n", "10\n");
        Verdict ok = judge.judge("5\n", "10", sandbox, {});
        CHECK(ok.kind == VerdictKind::AC);
        CHECK(ok.judge_source == JudgeSource::exact);
        Verdict bad = judge.judge("5\n", "10 ", sandbox, {});
        CHECK(bad.kind == VerdictKind::WA);
    }
    SUBCASE("no judge at all refuses to decide") {
        JudgeContext judge;
        CHECK_THROWS_AS(judge.judge("5\n", "10\n", sandbox, {}), JudgeError);
    }
}

TEST_CASE("resolve_judgement classifies resource failures before judging") {
    test::TempDir dir;
    Sandbox sandbox(dir.path);
    CompileResult loop = sandbox.compile("int main() { for (;;) {} }\n", fast_toolchain());
    REQUIRE(loop.ok());
    JudgeContext judge;
    judge.add_expected("x", "y");
    ExecutionLimits limits;
    limits.wall_seconds = 0.2;
    Verdict verdict = resolve_judgement("x", *loop.binary, judge, sandbox, limits);
    CHECK(verdict.kind == VerdictKind::TLE);
    CHECK(verdict.judge_source == JudgeSource::none);
}
