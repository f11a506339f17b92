#include "solvita/prompt.hpp"

#include <json.hpp>

#include <fstream>

namespace solvita {

namespace {

bool is_key_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Locates the next <KEY> placeholder at or after `from`. Keys are uppercase
// identifiers; any other angle-bracketed text is literal.
bool next_placeholder(const std::string& body, std::size_t from, std::size_t& begin,
                      std::size_t& end, std::string& key) {
    std::size_t i = from;
    while ((i = body.find('<', i)) != std::string::npos) {
        std::size_t j = i + 1;
        while (j < body.size() && is_key_char(body[j])) {
            ++j;
        }
        if (j > i + 1 && j < body.size() && body[j] == '>' && body[i + 1] >= 'A' &&
            body[i + 1] <= 'Z') {
            begin = i;
            end = j + 1;
            key = body.substr(i + 1, j - i - 1);
            return true;
        }
        i = i + 1;
    }
    return false;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
    }
    return out;
}

} // namespace

std::vector<std::string> placeholder_keys(const std::string& body) {
    std::vector<std::string> keys;
    std::set<std::string> seen;
    std::size_t from = 0, begin = 0, end = 0;
    std::string key;
    while (next_placeholder(body, from, begin, end, key)) {
        if (seen.insert(key).second) {
            keys.push_back(key);
        }
        from = end;
    }
    return keys;
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
    std::vector<std::string> missing_required;
    for (const std::string& required : tmpl.required_keys) {
        if (bindings.count(required) == 0) {
            missing_required.push_back(required);
        }
    }
    if (!missing_required.empty()) {
        throw PromptError("template '" + tmpl.name +
                          "': unbound required keys: " + join(missing_required));
    }

    std::vector<std::string> unknown;
    for (const std::string& key : placeholder_keys(tmpl.body)) {
        if (bindings.count(key) == 0) {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        throw PromptError("template '" + tmpl.name +
                          "': placeholders without bindings: " + join(unknown));
    }

    // Single pass over the original body; binding values are inserted
    // verbatim and never rescanned.
    std::string out;
    out.reserve(tmpl.body.size());
    std::size_t from = 0, begin = 0, end = 0;
    std::string key;
    while (next_placeholder(tmpl.body, from, begin, end, key)) {
        out.append(tmpl.body, from, begin - from);
        out.append(bindings.at(key));
        from = end;
    }
    out.append(tmpl.body, from, tmpl.body.size() - from);
    return out;
}

void PromptLibrary::add(PromptTemplate tmpl) {
    templates_[tmpl.name] = std::move(tmpl);
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw PromptError("unknown prompt template: " + name);
    }
    return it->second;
}

bool PromptLibrary::contains(const std::string& name) const {
    return templates_.count(name) != 0;
}

std::vector<std::string> PromptLibrary::names() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [name, tmpl] : templates_) {
        out.push_back(name);
    }
    return out;
}

PromptLibrary PromptLibrary::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw PromptError("cannot open prompt file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw PromptError("malformed prompt file " + path.string() + ": " + e.what());
    }
    PromptLibrary lib;
    for (const auto& entry : doc.at("templates")) {
        PromptTemplate tmpl;
        tmpl.name = entry.at("name").get<std::string>();
        tmpl.body = entry.at("body").get<std::string>();
        if (entry.contains("required")) {
            tmpl.required_keys = entry.at("required").get<std::set<std::string>>();
        }
        lib.add(std::move(tmpl));
    }
    return lib;
}

void PromptLibrary::save_file(const std::filesystem::path& path) const {
    nlohmann::json templates = nlohmann::json::array();
    for (const auto& [name, tmpl] : templates_) {
        templates.push_back({
            {"name", tmpl.name},
            {"body", tmpl.body},
            {"required", tmpl.required_keys},
        });
    }
    nlohmann::json doc = {{"format", "solvita.prompts"}, {"version", 1}, {"templates", templates}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw PromptError("cannot write prompt file: " + path.string());
    }
    out << doc.dump(2) << '\n';
}

PromptLibrary PromptLibrary::defaults() {
    PromptLibrary lib;

    lib.add({"abstract_problem",
             "Reduce the task below to a canonical formal statement and predict its algorithmic "
             "tags.\n\nProblem:\n<PROBLEM_DESC>\n\nConstraints:\n<CONSTRAINTS_JSON>\n\nAdvice from "
             "earlier episodes:\n<MEMORY_ADVICE>\n\nReturn one strict JSON object:\n"
             "{\"canonical_problem\": {\"objective\": \"...\", \"inputs\": {}, \"outputs\": {}},\n"
             " \"algorithmic_tags_level1\": [\"...\"],\n"
             " \"algorithmic_tags_level2\": [\"...\"],\n"
             " \"abstract_confidence\": 0.0}\n"
             "No markdown fences, no commentary.",
             {"PROBLEM_DESC", "CONSTRAINTS_JSON"}});

    lib.add({"generate_code.initial",
             "Write a complete C++17 program for the task below. Explicit standard headers only, "
             "fast I/O, allocations sized against the stated bounds.\n\nProblem:\n<PROBLEM_DESC>\n\n"
             "Proposed approach:\n<ALGORITHM>\n\nConstraints:\n<CONSTRAINTS_BLOCK>\n\nPublic "
             "tests:\n<PUBLIC_BLOCK>\n\nRetrieved skills:\n<SOLVER_GRAPH_BLOCK>\n\nAdvice:\n"
             "<MEMORY_ADVICE>\n\nRespond with:\n### Design\n[short design]\n### Solution\n"
             "```cpp\n[complete program]\n```",
             {"PROBLEM_DESC", "PUBLIC_BLOCK"}});

    lib.add({"generate_code.patch_decision",
             "Pick the repair mode for a failing C++ solution.\n\nProblem:\n<PROBLEM_DESC>\n\n"
             "Current code:\n```cpp\n<PREV_CODE>\n```\n\nFailure evidence:\n<FAILURES_BLOCK>\n\n"
             "Advice:\n<MEMORY_ADVICE>\n\nChoose \"patch\" when the fault is localized and the "
             "approach is sound; choose \"full_regen\" when the approach itself is wrong.\n"
             "Return ONLY JSON: {\"mode\":\"patch|full_regen\",\"confidence\":\"low|medium|high\","
             "\"reason\":\"one sentence\"}",
             {"PREV_CODE", "FAILURES_BLOCK"}});

    lib.add({"generate_code.patch",
             "Fix the failing C++ solution below with minimal SEARCH/REPLACE edits.\n\nProblem:\n"
             "<PROBLEM_DESC>\n\nCurrent code (buggy):\n```cpp\n<PREV_CODE>\n```\n\nFailures:\n"
             "<FAILURES_BLOCK>\n\nAdvice:\n<MEMORY_ADVICE>\n\nEvery edit must use exactly this "
             "format:\n<<<<<<< SEARCH\n[exact snippet from the current code]\n=======\n"
             "[replacement]\n>>>>>>> REPLACE\n\nRules: the SEARCH body must match the current code "
             "byte-exactly and occur exactly once; keep edits surgical.",
             {"PREV_CODE", "FAILURES_BLOCK"}});

    lib.add({"generate_code.regenerate",
             "Rewrite the failing C++ solution from scratch. Diagnose the root cause first, then "
             "produce a complete replacement.\n\nProblem:\n<PROBLEM_DESC>\n\nPrevious code "
             "(failing):\n```cpp\n<PREV_CODE>\n```\n\nFailures:\n<FAILURES_BLOCK>\n\nAdvice:\n"
             "<MEMORY_ADVICE>\n\nRespond with:\n### Diagnosis\n[root cause]\n### Solution\n"
             "```cpp\n[complete program]\n```",
             {"PREV_CODE", "FAILURES_BLOCK"}});

    lib.add({"generate_tests.generator",
             "Write a C++17 test-input generator for the problem below. The program takes one "
             "integer seed as its first command-line argument and prints exactly one valid input "
             "instance to stdout; different seeds should produce different instances.\n\nProblem:\n"
             "<PROBLEM_DESC>\n\nConstraints:\n<CONSTRAINTS>\n\nPublic tests:\n<PUBLIC_TESTS>\n"
             "<ADVICE_BLOCK>\nReturn ONLY JSON with escaped newlines: {\"generator_cpp\": \"...\"}",
             {"PROBLEM_DESC", "CONSTRAINTS"}});

    lib.add({"generate_tests.validator",
             "Write a C++17 input validator for the problem below. It reads one candidate input "
             "from stdin and exits 0 when the input is well-formed and within every stated bound, "
             "non-zero otherwise. Validate the input only; print nothing on success.\n\nProblem:\n"
             "<PROBLEM_DESC>\n\nConstraints:\n<CONSTRAINTS>\n\nPublic tests:\n<PUBLIC_TESTS>\n"
             "Return ONLY JSON with escaped newlines: {\"validator_cpp\": \"...\"}",
             {"PROBLEM_DESC", "CONSTRAINTS"}});

    lib.add({"generate_tests.checker",
             "Write a C++17 checker that verifies a candidate output independently, without any "
             "reference answer. Invocation: checker <input_file> <candidate_output_file>. Exit 0 "
             "when the output is correct, non-zero otherwise, printing a short reason.\n\nProblem:\n"
             "<PROBLEM_DESC>\n\nConstraints:\n<CONSTRAINTS>\n\nPublic tests:\n<PUBLIC_TESTS>\n"
             "Return ONLY JSON with escaped newlines: {\"checker_cpp\": \"...\"}",
             {"PROBLEM_DESC", "CONSTRAINTS"}});

    lib.add({"generate_tests.solver",
             "Write an independent C++17 reference solution for the problem below. Correctness "
             "first; a simple polynomial algorithm is preferred over contest tricks. It must "
             "reproduce the expected output for every public test.\n\nAttempt guidance:\n"
             "<STAGE_GUIDANCE>\n<SOLVER_ADVICE_BLOCK>\nProblem:\n<PROBLEM_DESC>\n\nConstraints:\n"
             "<CONSTRAINTS>\n\nPublic tests:\n<PUBLIC_TESTS_BLOCK>\n\nStrategy families:\n"
             "<TEMPLATES_JSON>\n\nReturn ONLY JSON: {\"selected_family_id\": \"...\", "
             "\"template_name\": \"...\", \"solver_cpp\": \"...\"}",
             {"PROBLEM_DESC", "PUBLIC_TESTS_BLOCK"}});

    lib.add({"code_analyst.main",
             "You are the code analyst for an adversarial testing workflow. Find the most likely "
             "bug in the target program.\n\nProblem:\n<PROBLEM_DESC>\n\nConstraints:\n"
             "<CONSTRAINTS_JSON>\n\nTarget code:\n```cpp\n<TARGET_CODE>\n```\n<ADVICE_SECTION>\n"
             "You may verify hypotheses with tools. Reply with ONE JSON object, either a tool "
             "call:\n{\"tool\": \"run_python|run_cpp\", \"parameters\": {\"script_code\": \"...\"} "
             "or {\"cpp_code\": \"...\"}}\nor a final report:\n{\"bug_class\": "
             "\"overflow|hash_collision|index_oob|tle|logic_branch|unknown\", \"confidence\": "
             "\"high|medium|low\", \"evidence\": [\"...\"], \"suggested_route\": "
             "\"anti_hash|semantic|stress\", \"input_hypothesis\": [\"...\"]}\n\nHistory:\n"
             "<HISTORY_TEXT>",
             {"PROBLEM_DESC", "TARGET_CODE"}});

    lib.add({"code_analyst.force_tool",
             "Your vulnerability report is too weak to submit. Call exactly one tool first and do "
             "not submit a final report yet.\n\nTarget code:\n```cpp\n<TARGET_CODE>\n```\n\n"
             "Weak report:\n<WEAK_REPORT_JSON>\n\nHistory:\n<HISTORY_TEXT>\n\nReturn ONLY a tool "
             "call JSON object: {\"tool\": \"run_python|run_cpp\", \"parameters\": {...}}",
             {"TARGET_CODE", "WEAK_REPORT_JSON"}});

    lib.add({"code_analyst.json_repair",
             "Your previous reply was not valid JSON for the analyst protocol. Restate the same "
             "intent as ONE valid JSON object (a tool call or a final report), with no text "
             "outside the JSON.\n\nPrevious reply:\n<PREVIOUS_RESPONSE>",
             {"PREVIOUS_RESPONSE"}});

    lib.add({"hacker.semantic.generator",
             "Write a standalone C++17 program that prints exactly one valid, adversarial test "
             "input targeting the reported vulnerability. Validity first: the input must satisfy "
             "every constraint before being adversarial.\n\nProblem:\n<PROBLEM_DESC>\n\n"
             "Constraints:\n<CONSTRAINTS_TEXT>\n\nVulnerability report:\n<REPORT_JSON>\n\n"
             "Return ONLY the C++ code, no markdown fences.",
             {"PROBLEM_DESC", "REPORT_JSON"}});

    lib.add({"hacker.stress.generator",
             "Write a standalone C++17 program that prints exactly one valid test input as large "
             "and boundary-heavy as the constraints allow. Enforce every structural constraint in "
             "code; use fast output.\n\nProblem:\n<PROBLEM_DESC>\n\nConstraints:\n"
             "<CONSTRAINTS_TEXT>\n\nReturn ONLY the C++ code, no markdown fences.",
             {"PROBLEM_DESC"}});

    lib.add({"hacker.antihash.generator",
             "Write a standalone C++17 program that prints one valid test input designed to "
             "collide the hashing scheme identified in the report (for example Thue-Morse style "
             "constructions or modulus-specific collisions). Respect all length bounds.\n\n"
             "Problem:\n<PROBLEM_DESC>\n\nConstraints:\n<CONSTRAINTS_TEXT>\n\nVulnerability "
             "report:\n<REPORT_JSON>\n\nReturn ONLY the C++ code, no markdown fences.",
             {"PROBLEM_DESC", "REPORT_JSON"}});

    for (const char* route : {"semantic", "stress", "antihash"}) {
        lib.add({std::string("hacker.") + route + ".checklist",
                 "The adversarial input generator below failed. Produce a compact JSON repair "
                 "checklist before patching. Restore validator-accepted output first, then keep "
                 "the attack goal.\n\nFailure type: <FAILURE_KIND>\nFailure reason:\n"
                 "<FAILURE_REASON>\n\nGenerator code:\n<LAST_GENERATOR_CODE>\n\nReturn ONLY JSON: "
                 "{\"must_fix\": [\"...\"], \"do_not_regress\": [\"...\"], \"attack_goal\": "
                 "[\"...\"]}",
                 {"FAILURE_KIND", "LAST_GENERATOR_CODE"}});
        lib.add({std::string("hacker.") + route + ".patch",
                 "Patch the failing generator with minimal SEARCH/REPLACE edits; do not rewrite "
                 "it.\n\nFailure type: <FAILURE_KIND>\nFailure reason:\n<FAILURE_REASON>\n\nRepair "
                 "checklist:\n<CHECKLIST_JSON>\n\nCurrent generator code:\n<LAST_GENERATOR_CODE>\n\n"
                 "Each SEARCH body must match the current code exactly once. Required format:\n"
                 "<<<<<<< SEARCH\n[exact snippet]\n=======\n[replacement]\n>>>>>>> REPLACE",
                 {"FAILURE_KIND", "LAST_GENERATOR_CODE"}});
    }

    return lib;
}

} // namespace solvita
