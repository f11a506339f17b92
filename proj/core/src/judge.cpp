#include "solvita/judge.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>

namespace solvita {

namespace {

// Materializes the (input, candidate output) pair for checker invocation.
struct TempFilePair {
    std::filesystem::path dir;
    std::filesystem::path input_path;
    std::filesystem::path output_path;

    TempFilePair(const std::filesystem::path& root, const std::string& input,
                 const std::string& output) {
        std::filesystem::create_directories(root);
        std::string pattern = (root / "judge-XXXXXX").string();
        std::vector<char> buf(pattern.begin(), pattern.end());
        buf.push_back('\0');
        if (::mkdtemp(buf.data()) == nullptr) {
            throw JudgeError("cannot create judge temp dir");
        }
        dir = buf.data();
        input_path = dir / "input.txt";
        output_path = dir / "output.txt";
        write(input_path, input);
        write(output_path, output);
    }
    ~TempFilePair() {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }

    static void write(const std::filesystem::path& path, const std::string& bytes) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw JudgeError("cannot write judge temp file " + path.string());
        }
    }
};

} // namespace

std::string to_string(AnswerRoute route) {
    return route == AnswerRoute::unique_answer ? "unique_answer" : "multi_answer";
}

std::string to_string(OracleFailure failure) {
    switch (failure) {
    case OracleFailure::none: return "none";
    case OracleFailure::unready: return "unready";
    case OracleFailure::self_check_failed: return "self_check_failed";
    case OracleFailure::crash: return "crash";
    }
    throw std::logic_error("unreachable oracle failure");
}

nlohmann::json SupervisionArtifact::to_json() const {
    return {
        {"generator_src", generator_src},
        {"validator_src", validator_src},
        {"checker_src", checker_src},
        {"solver_src", solver_src},
        {"inputs", inputs},
        {"expected_outputs", expected_outputs},
        {"route", to_string(route)},
        {"checker_evidence", checker_evidence},
        {"cert_ratio", cert_ratio},
        {"accepted", accepted},
        {"failure_mode", to_string(failure_mode)},
        {"family_id", family_id},
    };
}

SupervisionArtifact SupervisionArtifact::from_json(const nlohmann::json& j) {
    SupervisionArtifact artifact;
    artifact.generator_src = j.at("generator_src").get<std::string>();
    artifact.validator_src = j.at("validator_src").get<std::string>();
    artifact.checker_src = j.at("checker_src").get<std::string>();
    artifact.solver_src = j.at("solver_src").get<std::string>();
    artifact.inputs = j.at("inputs").get<std::vector<std::string>>();
    artifact.expected_outputs = j.at("expected_outputs").get<std::vector<std::string>>();
    artifact.route = j.at("route").get<std::string>() == "multi_answer"
                         ? AnswerRoute::multi_answer
                         : AnswerRoute::unique_answer;
    artifact.checker_evidence = j.at("checker_evidence").get<std::vector<std::string>>();
    artifact.cert_ratio = j.at("cert_ratio").get<double>();
    artifact.accepted = j.at("accepted").get<bool>();
    const std::string failure = j.at("failure_mode").get<std::string>();
    if (failure == "none") artifact.failure_mode = OracleFailure::none;
    else if (failure == "unready") artifact.failure_mode = OracleFailure::unready;
    else if (failure == "self_check_failed") artifact.failure_mode = OracleFailure::self_check_failed;
    else if (failure == "crash") artifact.failure_mode = OracleFailure::crash;
    else throw std::invalid_argument("unknown failure mode: " + failure);
    artifact.family_id = j.value("family_id", "");
    return artifact;
}

JudgeContext JudgeContext::from_artifact(const SupervisionArtifact& artifact,
                                         const Sandbox& sandbox, const ToolchainConfig& toolchain,
                                         const ExecutionLimits&) {
    JudgeContext ctx;
    if (!artifact.checker_src.empty()) {
        CompileResult compiled = sandbox.compile(artifact.checker_src, toolchain);
        if (!compiled.ok()) {
            throw JudgeError("checker source does not compile: " +
                             compiled.failure->diagnostic);
        }
        ctx.checker_ = std::move(*compiled.binary);
    }
    if (!artifact.solver_src.empty()) {
        CompileResult compiled = sandbox.compile(artifact.solver_src, toolchain);
        if (!compiled.ok()) {
            throw JudgeError("reference solver source does not compile: " +
                             compiled.failure->diagnostic);
        }
        ctx.reference_ = std::move(*compiled.binary);
    }
    for (std::size_t i = 0; i < artifact.inputs.size() && i < artifact.expected_outputs.size();
         ++i) {
        ctx.add_expected(artifact.inputs[i], artifact.expected_outputs[i]);
    }
    return ctx;
}

void JudgeContext::add_expected(const std::string& input, const std::string& expected) {
    expected_by_input_[normalize_trailing_newlines(input)] = expected;
}

bool JudgeContext::has_any_judge() const {
    return checker_.has_value() || reference_.has_value() || !expected_by_input_.empty();
}

Verdict JudgeContext::judge(const std::string& input, const std::string& candidate_stdout,
                            const Sandbox& sandbox, const ExecutionLimits& limits) const {
    // Priority 1: custom checker. Exit 0 accepts, anything else rejects;
    // lower-priority judges are never consulted once a checker exists.
    if (checker_.has_value()) {
        TempFilePair files(sandbox.work_root(), input, candidate_stdout);
        RawOutcome outcome = sandbox.execute(
            *checker_, {files.input_path.string(), files.output_path.string()}, "", limits);
        if (outcome.limit_hit != LimitHit::none || outcome.signaled) {
            throw JudgeError("checker did not run to completion: " +
                             classify_outcome(outcome).diagnostic);
        }
        Verdict verdict;
        verdict.judge_source = JudgeSource::checker;
        verdict.kind = outcome.exit_status == 0 ? VerdictKind::AC : VerdictKind::WA;
        verdict.diagnostic = normalize_trailing_newlines(outcome.stderr_bytes);
        return verdict;
    }
    // Priority 2: reference-solution token comparison.
    if (reference_.has_value()) {
        RawOutcome outcome = sandbox.execute(*reference_, input, limits);
        if (!outcome.ran_clean()) {
            throw JudgeError("reference solver failed on input: " +
                             classify_outcome(outcome).diagnostic);
        }
        Verdict verdict;
        verdict.judge_source = JudgeSource::reference;
        verdict.kind = token_streams_equal(outcome.stdout_bytes, candidate_stdout)
                           ? VerdictKind::AC
                           : VerdictKind::WA;
        if (verdict.kind == VerdictKind::WA) {
            verdict.diagnostic = "token streams differ from reference output";
        }
        return verdict;
    }
    // Priority 3: exact match on stored expected output.
    auto it = expected_by_input_.find(normalize_trailing_newlines(input));
    if (it != expected_by_input_.end()) {
        Verdict verdict;
        verdict.judge_source = JudgeSource::exact;
        verdict.kind = normalize_trailing_newlines(candidate_stdout) ==
                               normalize_trailing_newlines(it->second)
                           ? VerdictKind::AC
                           : VerdictKind::WA;
        if (verdict.kind == VerdictKind::WA) {
            verdict.diagnostic = "bytes differ from stored expected output";
        }
        return verdict;
    }
    throw JudgeError("no judge available for this input");
}

Verdict resolve_judgement(const std::string& input, const CompiledBinary& candidate,
                          const JudgeContext& judge, const Sandbox& sandbox,
                          const ExecutionLimits& limits) {
    RawOutcome outcome = sandbox.execute(candidate, input, limits);
    Verdict verdict = classify_outcome(outcome);
    if (verdict.kind != VerdictKind::AC) {
        return verdict; // resource or crash verdicts need no judging
    }
    Verdict judged = judge.judge(input, outcome.stdout_bytes, sandbox, limits);
    judged.elapsed_seconds = outcome.elapsed_seconds;
    judged.peak_memory_bytes = outcome.peak_memory_bytes;
    return judged;
}

} // namespace solvita
