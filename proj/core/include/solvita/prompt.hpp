#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace solvita {

// Prompt body with <KEY> placeholders filled at call time. Placeholders are
// uppercase tokens; rendering is single-pass, so placeholder-shaped text
// inside a binding value is never re-expanded.
struct PromptTemplate {
    std::string name;
    std::string body;
    std::set<std::string> required_keys;
};

class PromptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Substitutes every <KEY> occurrence with its binding. Throws PromptError
/// when a required key is unbound or when the body contains placeholders not
/// covered by the bindings (the message lists the offending keys).
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings);

/// Placeholder keys appearing in a body, in first-occurrence order.
std::vector<std::string> placeholder_keys(const std::string& body);

// Named template collection, loadable from a JSON config file.
class PromptLibrary {
public:
    void add(PromptTemplate tmpl);
    const PromptTemplate& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;

    static PromptLibrary load_file(const std::filesystem::path& path);
    void save_file(const std::filesystem::path& path) const;

    /// Built-in templates for every pipeline call site.
    static PromptLibrary defaults();

private:
    std::map<std::string, PromptTemplate> templates_;
};

} // namespace solvita
