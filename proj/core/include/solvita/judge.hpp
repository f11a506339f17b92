#pragma once

#include "solvita/sandbox.hpp"
#include "solvita/supervision.hpp"

#include <map>
#include <optional>

namespace solvita {

class JudgeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Compiled judging assets for one problem. Resolution follows the strict
// priority order: custom checker, then reference-solution token comparison,
// then exact match against stored expected outputs.
class JudgeContext {
public:
    JudgeContext() = default;

    /// Compiles whatever judge sources the artifact carries and indexes its
    /// stored expected outputs. Compile failures of a judge source throw:
    /// a broken judge is an infrastructure fault, not a candidate verdict.
    static JudgeContext from_artifact(const SupervisionArtifact& artifact, const Sandbox& sandbox,
                                      const ToolchainConfig& toolchain = {},
                                      const ExecutionLimits& limits = {});

    void set_checker(CompiledBinary checker) { checker_ = std::move(checker); }
    void set_reference(CompiledBinary reference) { reference_ = std::move(reference); }
    void add_expected(const std::string& input, const std::string& expected);

    bool has_checker() const { return checker_.has_value(); }
    bool has_reference() const { return reference_.has_value(); }
    bool has_any_judge() const;

    /// Judges a clean candidate run on one input through the priority chain;
    /// judge_source records which judge decided. Throws JudgeError when no
    /// judge can decide the input (never a silent AC).
    Verdict judge(const std::string& input, const std::string& candidate_stdout,
                  const Sandbox& sandbox, const ExecutionLimits& limits = {}) const;

private:
    std::optional<CompiledBinary> checker_;
    std::optional<CompiledBinary> reference_;
    std::map<std::string, std::string> expected_by_input_;
};

/// Full per-test resolution: run the candidate, classify resource/crash
/// outcomes, then consult the judge chain for clean runs.
Verdict resolve_judgement(const std::string& input, const CompiledBinary& candidate,
                          const JudgeContext& judge, const Sandbox& sandbox,
                          const ExecutionLimits& limits = {});

} // namespace solvita
