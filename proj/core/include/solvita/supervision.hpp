#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace solvita {

enum class AnswerRoute { unique_answer, multi_answer };
enum class OracleFailure { none, unready, self_check_failed, crash };

std::string to_string(AnswerRoute route);
std::string to_string(OracleFailure failure);

// Certified supervision bundle: the four generated sources, the certified
// test set, and the gate outcome. `accepted` is only ever set by the gate.
struct SupervisionArtifact {
    std::string generator_src;
    std::string validator_src;
    std::string checker_src; // empty when the route needs no checker
    std::string solver_src;
    std::vector<std::string> inputs;
    std::vector<std::string> expected_outputs;
    AnswerRoute route = AnswerRoute::unique_answer;
    std::vector<std::string> checker_evidence;
    double cert_ratio = 0.0;
    bool accepted = false;
    OracleFailure failure_mode = OracleFailure::none;
    std::string family_id;

    nlohmann::json to_json() const;
    static SupervisionArtifact from_json(const nlohmann::json& j);
};

} // namespace solvita
