#include "solvita/sandbox.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace solvita {

namespace {

constexpr const char* kExecFailMarker = "solvita-exec-failed";

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::filesystem::path& root) {
        std::filesystem::create_directories(root);
        std::string pattern = (root / "job-XXXXXX").string();
        std::vector<char> buf(pattern.begin(), pattern.end());
        buf.push_back('\0');
        if (::mkdtemp(buf.data()) == nullptr) {
            throw SandboxError("mkdtemp failed: " + std::string(std::strerror(errno)));
        }
        path = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw SandboxError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw SandboxError("short write to " + path.string());
    }
}

std::string read_file_capped(const std::filesystem::path& path, std::uint64_t cap,
                             bool* truncated) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return {};
    }
    std::string data;
    data.resize(cap + 1);
    in.read(data.data(), static_cast<std::streamsize>(cap + 1));
    data.resize(static_cast<std::size_t>(in.gcount()));
    if (data.size() > cap) {
        data.resize(cap);
        if (truncated) *truncated = true;
    }
    return data;
}

void set_limit(int resource, rlim_t soft, rlim_t hard) {
    rlimit lim{soft, hard};
    ::setrlimit(resource, &lim); // best effort inside the child
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : command) {
        if (c == ' ' || c == '\t') {
            if (!current.empty()) {
                parts.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) {
        parts.push_back(std::move(current));
    }
    return parts;
}

std::string substitute(const std::string& token, const std::string& source,
                       const std::string& output) {
    std::string out = token;
    auto replace_all = [](std::string& text, const std::string& from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = text.find(from, pos)) != std::string::npos) {
            text.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(out, "{source}", source);
    replace_all(out, "{output}", output);
    return out;
}

} // namespace

std::string to_string(VerdictKind kind) {
    switch (kind) {
    case VerdictKind::AC: return "AC";
    case VerdictKind::WA: return "WA";
    case VerdictKind::TLE: return "TLE";
    case VerdictKind::MLE: return "MLE";
    case VerdictKind::RE: return "RE";
    case VerdictKind::crash: return "crash";
    case VerdictKind::compile_fail: return "compile_fail";
    }
    throw std::logic_error("unreachable verdict kind");
}

VerdictKind verdict_kind_from_string(const std::string& text) {
    if (text == "AC") return VerdictKind::AC;
    if (text == "WA") return VerdictKind::WA;
    if (text == "TLE") return VerdictKind::TLE;
    if (text == "MLE") return VerdictKind::MLE;
    if (text == "RE") return VerdictKind::RE;
    if (text == "crash") return VerdictKind::crash;
    if (text == "compile_fail") return VerdictKind::compile_fail;
    throw std::invalid_argument("unknown verdict kind: " + text);
}

std::string to_string(JudgeSource source) {
    switch (source) {
    case JudgeSource::none: return "none";
    case JudgeSource::checker: return "checker";
    case JudgeSource::reference: return "reference";
    case JudgeSource::exact: return "exact";
    }
    throw std::logic_error("unreachable judge source");
}

Sandbox::Sandbox(std::filesystem::path work_root) : work_root_(std::move(work_root)) {
    if (work_root_.empty()) {
        work_root_ = std::filesystem::temp_directory_path() / "solvita-sandbox";
    }
}

RawOutcome Sandbox::run_process(const std::vector<std::string>& argv,
                                std::string_view stdin_bytes,
                                const ExecutionLimits& limits) const {
    if (argv.empty()) {
        throw SandboxError("empty argv");
    }
    TempDir io(work_root_);
    const auto stdin_path = io.path / "stdin";
    const auto stdout_path = io.path / "stdout";
    const auto stderr_path = io.path / "stderr";
    write_file(stdin_path, stdin_bytes);

    const int in_fd = ::open(stdin_path.c_str(), O_RDONLY);
    const int out_fd = ::open(stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int err_fd = ::open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (in_fd < 0 || out_fd < 0 || err_fd < 0) {
        if (in_fd >= 0) ::close(in_fd);
        if (out_fd >= 0) ::close(out_fd);
        if (err_fd >= 0) ::close(err_fd);
        throw SandboxError("cannot open io files for job");
    }

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(in_fd);
        ::close(out_fd);
        ::close(err_fd);
        throw SandboxError("fork failed: " + std::string(std::strerror(errno)));
    }

    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in_fd, STDIN_FILENO);
        ::dup2(out_fd, STDOUT_FILENO);
        ::dup2(err_fd, STDERR_FILENO);
        ::close(in_fd);
        ::close(out_fd);
        ::close(err_fd);

        const rlim_t cpu = static_cast<rlim_t>(std::ceil(limits.cpu_seconds));
        set_limit(RLIMIT_CPU, cpu, cpu + 1);
        set_limit(RLIMIT_AS, limits.memory_bytes, limits.memory_bytes);
        set_limit(RLIMIT_FSIZE, limits.output_cap_bytes, limits.output_cap_bytes + (1 << 20));
        set_limit(RLIMIT_CORE, 0, 0);

        std::vector<char*> c_argv;
        c_argv.reserve(argv.size() + 1);
        for (const std::string& arg : argv) {
            c_argv.push_back(const_cast<char*>(arg.c_str()));
        }
        c_argv.push_back(nullptr);
        ::execvp(c_argv[0], c_argv.data());
        // Exec failure: report through stderr so the parent can tell an
        // infrastructure fault apart from a program fault.
        const std::string message = std::string(kExecFailMarker) + ": " + argv[0] + ": " +
                                    std::strerror(errno) + "\n";
        (void)!::write(STDERR_FILENO, message.data(), message.size());
        ::_exit(127);
    }

    ::close(in_fd);
    ::close(out_fd);
    ::close(err_fd);

    const auto wall_deadline =
        start + std::chrono::duration<double>(limits.wall_seconds);
    bool wall_killed = false;
    int status = 0;
    rusage usage{};
    for (;;) {
        const pid_t reaped = ::wait4(pid, &status, WNOHANG, &usage);
        if (reaped == pid) {
            break;
        }
        if (reaped < 0 && errno != EINTR) {
            throw SandboxError("wait4 failed: " + std::string(std::strerror(errno)));
        }
        if (!wall_killed && std::chrono::steady_clock::now() >= wall_deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            wall_killed = true;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    // Sweep stragglers sharing the job's process group.
    ::kill(-pid, SIGKILL);

    RawOutcome outcome;
    outcome.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outcome.peak_memory_bytes = static_cast<std::uint64_t>(usage.ru_maxrss) * 1024ull;
    outcome.signaled = WIFSIGNALED(status);
    outcome.term_signal = outcome.signaled ? WTERMSIG(status) : 0;
    outcome.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

    const double cpu_used = static_cast<double>(usage.ru_utime.tv_sec + usage.ru_stime.tv_sec) +
                            static_cast<double>(usage.ru_utime.tv_usec + usage.ru_stime.tv_usec) /
                                1e6;

    outcome.stdout_bytes =
        read_file_capped(stdout_path, limits.output_cap_bytes, &outcome.stdout_truncated);
    bool stderr_truncated = false;
    outcome.stderr_bytes = read_file_capped(stderr_path, 64 * 1024, &stderr_truncated);

    if (outcome.exit_status == 127 &&
        outcome.stderr_bytes.find(kExecFailMarker) != std::string::npos) {
        throw SandboxError("cannot spawn '" + argv[0] + "': " + outcome.stderr_bytes);
    }

    if (wall_killed) {
        outcome.limit_hit = LimitHit::time;
    } else if (outcome.signaled && outcome.term_signal == SIGXCPU) {
        outcome.limit_hit = LimitHit::time;
    } else if (cpu_used >= limits.cpu_seconds) {
        outcome.limit_hit = LimitHit::time;
    } else if (outcome.signaled && outcome.term_signal == SIGXFSZ) {
        outcome.limit_hit = LimitHit::output;
        outcome.stdout_truncated = true;
    } else if ((outcome.signaled || outcome.exit_status != 0) &&
               outcome.peak_memory_bytes >=
                   static_cast<std::uint64_t>(0.8 * static_cast<double>(limits.memory_bytes))) {
        outcome.limit_hit = LimitHit::memory;
    }
    return outcome;
}

RawOutcome Sandbox::execute(const CompiledBinary& binary, std::string_view stdin_bytes,
                            const ExecutionLimits& limits) const {
    return execute(binary, {}, stdin_bytes, limits);
}

RawOutcome Sandbox::execute(const CompiledBinary& binary, const std::vector<std::string>& args,
                            std::string_view stdin_bytes, const ExecutionLimits& limits) const {
    if (!binary.valid()) {
        throw SandboxError("invalid binary handle");
    }
    std::vector<std::string> argv;
    argv.push_back(binary.executable.string());
    argv.insert(argv.end(), args.begin(), args.end());
    return run_process(argv, stdin_bytes, limits);
}

CompileResult Sandbox::compile(const std::string& source, const ToolchainConfig& toolchain) const {
    if (source.empty()) {
        throw SandboxError("refusing to compile an empty source");
    }
    auto workspace = std::make_shared<TempDir>(work_root_);
    const auto source_path = workspace->path / ("prog" + toolchain.source_extension);
    const auto output_path = workspace->path / "prog";
    write_file(source_path, source);

    std::vector<std::string> argv;
    for (const std::string& token : split_command(toolchain.command_template)) {
        argv.push_back(substitute(token, source_path.string(), output_path.string()));
    }
    if (argv.empty()) {
        throw ToolchainError("toolchain command template is empty");
    }

    ExecutionLimits compile_limits;
    compile_limits.cpu_seconds = toolchain.compile_wall_seconds;
    compile_limits.wall_seconds = toolchain.compile_wall_seconds;
    compile_limits.memory_bytes = 4ull * 1024 * 1024 * 1024;
    compile_limits.output_cap_bytes = 8ull * 1024 * 1024;

    RawOutcome outcome;
    try {
        outcome = run_process(argv, "", compile_limits);
    } catch (const SandboxError& e) {
        throw ToolchainError(std::string("toolchain unavailable: ") + e.what());
    }

    CompileResult result;
    if (outcome.exit_status != 0 || outcome.signaled) {
        Verdict verdict;
        verdict.kind = VerdictKind::compile_fail;
        verdict.elapsed_seconds = outcome.elapsed_seconds;
        verdict.diagnostic = outcome.stderr_bytes.empty() ? "compiler exited with an error"
                                                          : outcome.stderr_bytes;
        result.failure = std::move(verdict);
        return result;
    }
    if (!std::filesystem::exists(output_path)) {
        throw ToolchainError("toolchain succeeded but produced no binary at " +
                             output_path.string());
    }
    CompiledBinary binary;
    binary.executable = output_path;
    binary.workspace = std::shared_ptr<void>(workspace, workspace.get());
    result.binary = std::move(binary);
    return result;
}

Verdict classify_outcome(const RawOutcome& outcome) {
    Verdict verdict;
    verdict.elapsed_seconds = outcome.elapsed_seconds;
    verdict.peak_memory_bytes = outcome.peak_memory_bytes;
    switch (outcome.limit_hit) {
    case LimitHit::time:
        verdict.kind = VerdictKind::TLE;
        verdict.diagnostic = "time limit exceeded";
        return verdict;
    case LimitHit::memory:
        verdict.kind = VerdictKind::MLE;
        verdict.diagnostic = "memory limit exceeded";
        return verdict;
    case LimitHit::output:
        verdict.kind = VerdictKind::RE;
        verdict.diagnostic = "output limit exceeded";
        return verdict;
    case LimitHit::none:
        break;
    }
    if (outcome.signaled) {
        verdict.kind = VerdictKind::crash;
        verdict.diagnostic = "killed by signal " + std::to_string(outcome.term_signal);
        return verdict;
    }
    if (outcome.exit_status != 0) {
        verdict.kind = VerdictKind::RE;
        verdict.diagnostic = "exit status " + std::to_string(outcome.exit_status);
        return verdict;
    }
    verdict.kind = VerdictKind::AC;
    return verdict;
}

bool token_streams_equal(std::string_view a, std::string_view b) {
    auto next_token = [](std::string_view text, std::size_t& pos) -> std::string_view {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        const std::size_t begin = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        return text.substr(begin, pos - begin);
    };
    std::size_t pa = 0, pb = 0;
    for (;;) {
        const std::string_view ta = next_token(a, pa);
        const std::string_view tb = next_token(b, pb);
        if (ta.empty() && tb.empty()) {
            return true;
        }
        if (ta != tb) {
            return false;
        }
    }
}

std::string normalize_trailing_newlines(std::string_view text) {
    std::size_t end = text.size();
    while (end > 0 && (text[end - 1] == '\n' || text[end - 1] == '\r')) {
        --end;
    }
    return std::string(text.substr(0, end));
}

} // namespace solvita
