#include "solvita/feature_key.hpp"

namespace solvita {

std::string to_string(FeatureKey::Kind kind) {
    switch (kind) {
    case FeatureKey::Kind::FSM: return "FSM";
    case FeatureKey::Kind::FAIL: return "FAIL";
    case FeatureKey::Kind::TAG: return "TAG";
    }
    throw std::logic_error("unreachable feature-key kind");
}

std::string FeatureKey::render() const {
    return to_string(kind) + ":" + value;
}

FeatureKey FeatureKey::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("feature key missing ':' separator: " + text);
    }
    const std::string head = text.substr(0, colon);
    std::string tail = text.substr(colon + 1);
    if (tail.empty()) {
        throw std::invalid_argument("feature key has empty value: " + text);
    }
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            throw std::invalid_argument("feature key contains whitespace: " + text);
        }
    }
    FeatureKey::Kind kind;
    if (head == "FSM") {
        kind = FeatureKey::Kind::FSM;
    } else if (head == "FAIL") {
        kind = FeatureKey::Kind::FAIL;
    } else if (head == "TAG") {
        kind = FeatureKey::Kind::TAG;
    } else {
        throw std::invalid_argument("unknown feature key kind: " + head);
    }
    return {kind, std::move(tail)};
}

std::string to_string(MemoryNamespace ns) {
    switch (ns) {
    case MemoryNamespace::plan: return "plan";
    case MemoryNamespace::solve: return "solve";
    case MemoryNamespace::test: return "test";
    case MemoryNamespace::hack: return "hack";
    case MemoryNamespace::oracle: return "oracle";
    }
    throw std::logic_error("unreachable namespace");
}

MemoryNamespace namespace_from_string(const std::string& text) {
    if (text == "plan") return MemoryNamespace::plan;
    if (text == "solve") return MemoryNamespace::solve;
    if (text == "test") return MemoryNamespace::test;
    if (text == "hack") return MemoryNamespace::hack;
    if (text == "oracle") return MemoryNamespace::oracle;
    throw std::invalid_argument("unknown namespace: " + text);
}

} // namespace solvita
