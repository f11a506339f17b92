#include "solvita/problem.hpp"

#include <fstream>

namespace solvita {

std::string to_string(Platform platform) {
    switch (platform) {
    case Platform::codeforces: return "codeforces";
    case Platform::atcoder: return "atcoder";
    case Platform::aizu: return "aizu";
    case Platform::leetcode: return "leetcode";
    case Platform::spoj: return "spoj";
    case Platform::uoj: return "uoj";
    case Platform::other: return "other";
    }
    throw std::logic_error("unreachable platform");
}

Platform platform_from_string(const std::string& text) {
    if (text == "codeforces") return Platform::codeforces;
    if (text == "atcoder") return Platform::atcoder;
    if (text == "aizu") return Platform::aizu;
    if (text == "leetcode") return Platform::leetcode;
    if (text == "spoj") return Platform::spoj;
    if (text == "uoj") return Platform::uoj;
    if (text == "other") return Platform::other;
    throw std::invalid_argument("unknown platform: " + text);
}

namespace {

nlohmann::json tests_to_json(const std::vector<TestPair>& tests) {
    nlohmann::json out = nlohmann::json::array();
    for (const TestPair& t : tests) {
        out.push_back({{"input", t.input}, {"output", t.output}});
    }
    return out;
}

std::vector<TestPair> tests_from_json(const nlohmann::json& j) {
    std::vector<TestPair> out;
    for (const auto& entry : j) {
        out.push_back({entry.at("input").get<std::string>(),
                       entry.at("output").get<std::string>()});
    }
    return out;
}

} // namespace

nlohmann::json ProblemRecord::to_json() const {
    nlohmann::json submissions_json = nlohmann::json::array();
    for (const Submission& s : submissions) {
        submissions_json.push_back({{"verdict", s.verdict}, {"exec_time_ms", s.exec_time_ms}});
    }
    nlohmann::json j = {
        {"id", id},
        {"platform", to_string(platform)},
        {"statement", statement},
        {"constraints", constraints},
        {"public_tests", tests_to_json(public_tests)},
        {"hidden_tests", tests_to_json(hidden_tests)},
        {"editorial", editorial},
        {"submissions", submissions_json},
        {"tags", tags},
        {"native_difficulty", native_difficulty},
        {"interactive", interactive},
        {"special_judge", special_judge},
        {"multi_test_packing", multi_test_packing},
    };
    if (difficulty.has_value()) {
        j["difficulty"] = {difficulty->lo, difficulty->hi};
    } else {
        j["difficulty"] = nullptr;
    }
    return j;
}

ProblemRecord ProblemRecord::from_json(const nlohmann::json& j) {
    ProblemRecord record;
    record.id = j.at("id").get<std::string>();
    record.platform = platform_from_string(j.at("platform").get<std::string>());
    record.statement = j.at("statement").get<std::string>();
    record.constraints = j.value("constraints", nlohmann::json::object());
    record.public_tests = tests_from_json(j.value("public_tests", nlohmann::json::array()));
    record.hidden_tests = tests_from_json(j.value("hidden_tests", nlohmann::json::array()));
    record.editorial = j.value("editorial", "");
    if (j.contains("submissions")) {
        for (const auto& s : j.at("submissions")) {
            record.submissions.push_back(
                {s.at("verdict").get<std::string>(), s.value("exec_time_ms", 0.0)});
        }
    }
    record.tags = j.value("tags", std::set<std::string>{});
    record.native_difficulty = j.value("native_difficulty", "");
    if (j.contains("difficulty") && !j.at("difficulty").is_null()) {
        const auto& band = j.at("difficulty");
        record.difficulty = DifficultyBand{band.at(0).get<int>(), band.at(1).get<int>()};
    }
    record.interactive = j.value("interactive", false);
    record.special_judge = j.value("special_judge", false);
    record.multi_test_packing = j.value("multi_test_packing", false);
    return record;
}

ProblemRecord load_problem(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open problem file: " + path.string());
    }
    nlohmann::json j;
    in >> j;
    return ProblemRecord::from_json(j);
}

void save_problem(const std::filesystem::path& path, const ProblemRecord& record) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write problem file: " + path.string());
    }
    out << record.to_json().dump(2) << '\n';
}

std::vector<ProblemRecord> load_problem_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open records file: " + path.string());
    }
    std::vector<ProblemRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(ProblemRecord::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("bad record at line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return records;
}

void save_problem_lines(const std::filesystem::path& path,
                        const std::vector<ProblemRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write records file: " + path.string());
    }
    for (const ProblemRecord& record : records) {
        out << record.to_json().dump() << '\n';
    }
}

} // namespace solvita
