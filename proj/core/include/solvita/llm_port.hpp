#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace solvita {

struct DecodingParams {
    double temperature = 0.1;
    int max_tokens = 16384;
};

class LlmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Pluggable completion backend. Every call is keyed by the prompt template
// name so scripted scenarios can bind canned completions to call sites.
class LlmPort {
public:
    virtual ~LlmPort() = default;
    virtual std::string complete(const std::string& prompt_name, const std::string& prompt,
                                 const DecodingParams& params) = 0;
    virtual std::string backend_name() const = 0;
};

struct ScenarioStep {
    // Matched against the prompt name: exact, or prefix when it ends in '*'.
    std::string expect;
    std::string response;
};

// Deterministic stand-in replaying an ordered scenario. Steps are consumed
// strictly in order; an unexpected call or an exhausted scenario throws, so
// tests fail loudly instead of drifting.
class ScriptedBackend : public LlmPort {
public:
    explicit ScriptedBackend(std::vector<ScenarioStep> steps,
                             std::map<std::string, std::string> metadata = {});
    ScriptedBackend(std::initializer_list<ScenarioStep> steps)
        : ScriptedBackend(std::vector<ScenarioStep>(steps)) {}

    static ScriptedBackend from_file(const std::filesystem::path& path);
    static void save_scenario(const std::filesystem::path& path,
                              const std::vector<ScenarioStep>& steps,
                              const std::map<std::string, std::string>& metadata = {});

    std::string complete(const std::string& prompt_name, const std::string& prompt,
                         const DecodingParams& params) override;
    std::string backend_name() const override { return "scripted"; }

    std::size_t remaining() const { return steps_.size() - next_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

    struct Exchange {
        std::string prompt_name;
        std::string prompt;
        std::string response;
    };
    const std::vector<Exchange>& transcript() const { return transcript_; }

private:
    std::vector<ScenarioStep> steps_;
    std::map<std::string, std::string> metadata_;
    std::size_t next_ = 0;
    std::vector<Exchange> transcript_;
};

// OpenAI-compatible chat-completion client (single user message per call).
class HttpBackend : public LlmPort {
public:
    struct Config {
        std::string base_url = "http://127.0.0.1:8000";
        std::string path = "/v1/chat/completions";
        std::string model = "default";
        std::string api_key; // optional bearer token
        double timeout_seconds = 120.0;
    };

    explicit HttpBackend(Config config);

    std::string complete(const std::string& prompt_name, const std::string& prompt,
                         const DecodingParams& params) override;
    std::string backend_name() const override { return "http_compatible"; }

private:
    Config config_;
};

} // namespace solvita
