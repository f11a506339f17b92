#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace solvita {

enum class Platform { codeforces, atcoder, aizu, leetcode, spoj, uoj, other };

std::string to_string(Platform platform);
Platform platform_from_string(const std::string& text);

struct TestPair {
    std::string input;
    std::string output;
};

struct Submission {
    std::string verdict;
    double exec_time_ms = 0.0;
};

// Normalized difficulty on the Codeforces-compatible scale. Point values use
// lo == hi; coarse platform labels map to a band.
struct DifficultyBand {
    int lo = 0;
    int hi = 0;

    bool operator==(const DifficultyBand&) const = default;
};

inline constexpr int kDifficultyScaleMin = 800;
inline constexpr int kDifficultyScaleMax = 3500;

// Unified-schema problem record; the single input format for every
// downstream stage.
struct ProblemRecord {
    std::string id;
    Platform platform = Platform::other;
    std::string statement;
    nlohmann::json constraints = nlohmann::json::object();
    std::vector<TestPair> public_tests;
    std::vector<TestPair> hidden_tests;
    std::string editorial;
    std::vector<Submission> submissions;
    std::set<std::string> tags;
    std::string native_difficulty;
    std::optional<DifficultyBand> difficulty;
    bool interactive = false;
    bool special_judge = false;
    bool multi_test_packing = false;

    nlohmann::json to_json() const;
    static ProblemRecord from_json(const nlohmann::json& j);

    std::size_t test_count() const { return public_tests.size() + hidden_tests.size(); }
};

ProblemRecord load_problem(const std::filesystem::path& path);
void save_problem(const std::filesystem::path& path, const ProblemRecord& record);

/// Newline-delimited unified-schema records.
std::vector<ProblemRecord> load_problem_lines(const std::filesystem::path& path);
void save_problem_lines(const std::filesystem::path& path,
                        const std::vector<ProblemRecord>& records);

} // namespace solvita
