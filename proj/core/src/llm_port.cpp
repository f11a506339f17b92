#include "solvita/llm_port.hpp"

#include <json.hpp>
#include <httplib.h>

#include <fstream>

namespace solvita {

namespace {

bool step_matches(const std::string& expect, const std::string& prompt_name) {
    if (!expect.empty() && expect.back() == '*') {
        const std::string prefix = expect.substr(0, expect.size() - 1);
        return prompt_name.rfind(prefix, 0) == 0;
    }
    return expect == prompt_name;
}

} // namespace

ScriptedBackend::ScriptedBackend(std::vector<ScenarioStep> steps,
                                 std::map<std::string, std::string> metadata)
    : steps_(std::move(steps)), metadata_(std::move(metadata)) {}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LlmError("cannot open scenario file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw LlmError("malformed scenario file " + path.string() + ": " + e.what());
    }
    std::vector<ScenarioStep> steps;
    for (const auto& step : doc.at("steps")) {
        steps.push_back({step.at("expect").get<std::string>(),
                         step.at("response").get<std::string>()});
    }
    std::map<std::string, std::string> metadata;
    if (doc.contains("metadata")) {
        for (const auto& [key, value] : doc.at("metadata").items()) {
            metadata[key] = value.get<std::string>();
        }
    }
    return ScriptedBackend(std::move(steps), std::move(metadata));
}

void ScriptedBackend::save_scenario(const std::filesystem::path& path,
                                    const std::vector<ScenarioStep>& steps,
                                    const std::map<std::string, std::string>& metadata) {
    nlohmann::json steps_json = nlohmann::json::array();
    for (const ScenarioStep& step : steps) {
        steps_json.push_back({{"expect", step.expect}, {"response", step.response}});
    }
    nlohmann::json doc = {{"format", "solvita.scenario"},
                          {"version", 1},
                          {"metadata", metadata},
                          {"steps", steps_json}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw LlmError("cannot write scenario file: " + path.string());
    }
    out << doc.dump(2) << '\n';
}

std::string ScriptedBackend::complete(const std::string& prompt_name, const std::string& prompt,
                                      const DecodingParams&) {
    if (next_ >= steps_.size()) {
        throw LlmError("scripted scenario exhausted; unexpected call for prompt '" + prompt_name +
                       "'");
    }
    const ScenarioStep& step = steps_[next_];
    if (!step_matches(step.expect, prompt_name)) {
        throw LlmError("scripted scenario mismatch at step " + std::to_string(next_) +
                       ": expected prompt '" + step.expect + "', engine asked for '" + prompt_name +
                       "'");
    }
    ++next_;
    transcript_.push_back({prompt_name, prompt, step.response});
    return step.response;
}

HttpBackend::HttpBackend(Config config) : config_(std::move(config)) {}

std::string HttpBackend::complete(const std::string& prompt_name, const std::string& prompt,
                                  const DecodingParams& params) {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long>(config_.timeout_seconds * 1000.0)));
    client.set_connection_timeout(std::chrono::seconds(10));

    nlohmann::json request = {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", params.temperature},
        {"max_tokens", params.max_tokens},
    };

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto result = client.Post(config_.path, headers, request.dump(), "application/json");
    if (!result) {
        throw LlmError("http backend: request failed for prompt '" + prompt_name +
                       "': " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw LlmError("http backend: status " + std::to_string(result->status) + " for prompt '" +
                       prompt_name + "': " + result->body);
    }
    try {
        const nlohmann::json response = nlohmann::json::parse(result->body);
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("http backend: unparseable completion payload: ") + e.what());
    }
}

} // namespace solvita
