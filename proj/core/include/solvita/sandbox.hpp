#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace solvita {

struct ExecutionLimits {
    double cpu_seconds = 5.0;
    double wall_seconds = 10.0;
    std::uint64_t memory_bytes = 256ull * 1024 * 1024;
    std::uint64_t output_cap_bytes = 16ull * 1024 * 1024;
};

enum class VerdictKind { AC, WA, TLE, MLE, RE, crash, compile_fail };
enum class JudgeSource { none, checker, reference, exact };

std::string to_string(VerdictKind kind);
std::string to_string(JudgeSource source);
VerdictKind verdict_kind_from_string(const std::string& text);

struct Verdict {
    VerdictKind kind = VerdictKind::AC;
    double elapsed_seconds = 0.0;
    std::uint64_t peak_memory_bytes = 0;
    JudgeSource judge_source = JudgeSource::none;
    std::string diagnostic;
};

enum class LimitHit { none, time, memory, output };

// Raw execution outcome before judging.
struct RawOutcome {
    std::string stdout_bytes;
    std::string stderr_bytes;
    int exit_status = 0;
    bool signaled = false;
    int term_signal = 0;
    double elapsed_seconds = 0.0;
    std::uint64_t peak_memory_bytes = 0;
    LimitHit limit_hit = LimitHit::none;
    bool stdout_truncated = false;

    bool ran_clean() const {
        return !signaled && exit_status == 0 && limit_hit == LimitHit::none;
    }
};

// Infrastructure faults (spawn failures, missing toolchain) are not verdicts.
class SandboxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ToolchainError : public SandboxError {
public:
    using SandboxError::SandboxError;
};

// External compiler invocation. {source} and {output} expand to the job's
// source and binary paths.
struct ToolchainConfig {
    std::string command_template = "g++ -std=c++17 -O2 -o {output} {source}";
    std::string source_extension = ".cpp";
    double compile_wall_seconds = 60.0;
};

// Compiled program handle; the backing temp directory lives as long as any
// copy of the handle.
struct CompiledBinary {
    std::filesystem::path executable;
    std::shared_ptr<void> workspace; // owns the temp dir

    bool valid() const { return !executable.empty(); }
};

struct CompileResult {
    std::optional<CompiledBinary> binary;
    std::optional<Verdict> failure; // compile_fail with diagnostics

    bool ok() const { return binary.has_value(); }
};

// Compiles and executes untrusted programs in per-job temp directories under
// CPU, wall-clock, memory, and output limits. Jobs share no mutable state and
// may run from any thread.
class Sandbox {
public:
    explicit Sandbox(std::filesystem::path work_root = {});

    /// Hermetic compile into a fresh temp dir. A missing toolchain throws
    /// ToolchainError; a failing compile returns a compile_fail verdict.
    CompileResult compile(const std::string& source, const ToolchainConfig& toolchain = {}) const;

    /// Runs the binary with the given stdin bytes under the limits.
    RawOutcome execute(const CompiledBinary& binary, std::string_view stdin_bytes,
                       const ExecutionLimits& limits) const;
    RawOutcome execute(const CompiledBinary& binary, const std::vector<std::string>& args,
                       std::string_view stdin_bytes, const ExecutionLimits& limits) const;

    /// Runs an arbitrary argv under the limits (interpreters, checkers).
    RawOutcome run_process(const std::vector<std::string>& argv, std::string_view stdin_bytes,
                           const ExecutionLimits& limits) const;

    const std::filesystem::path& work_root() const { return work_root_; }

private:
    std::filesystem::path work_root_;
};

/// Maps a raw outcome onto TLE / MLE / RE / crash; clean runs come back as AC
/// with no judge source (correctness still undecided).
Verdict classify_outcome(const RawOutcome& outcome);

/// Whitespace-insensitive token-stream equality (tokens are opaque strings).
bool token_streams_equal(std::string_view a, std::string_view b);

/// Strips trailing CR/LF bytes only.
std::string normalize_trailing_newlines(std::string_view text);

} // namespace solvita
