#pragma once

#include <compare>
#include <set>
#include <stdexcept>
#include <string>

namespace solvita {

// Sparse context feature for bandit scoring. Keys cover three axes:
// pipeline position (FSM), previous failure type (FAIL), problem tags (TAG).
struct FeatureKey {
    enum class Kind { FSM, FAIL, TAG };

    Kind kind = Kind::FSM;
    std::string value;

    FeatureKey() = default;
    FeatureKey(Kind k, std::string v) : kind(k), value(std::move(v)) {}

    /// Canonical form "KIND:value", no whitespace.
    std::string render() const;

    /// Inverse of render(); throws std::invalid_argument on malformed input.
    static FeatureKey parse(const std::string& text);

    auto operator<=>(const FeatureKey&) const = default;
};

std::string to_string(FeatureKey::Kind kind);

inline FeatureKey fsm_key(std::string v) { return {FeatureKey::Kind::FSM, std::move(v)}; }
inline FeatureKey fail_key(std::string v) { return {FeatureKey::Kind::FAIL, std::move(v)}; }
inline FeatureKey tag_key(std::string v) { return {FeatureKey::Kind::TAG, std::move(v)}; }

// Featurized pipeline state handed to every scoring call.
// active_keys must be non-empty when scoring.
struct BanditContext {
    std::set<FeatureKey> active_keys;
    std::set<std::string> problem_tags;
};

// Knowledge-store namespaces, one per agent role plus the test store.
enum class MemoryNamespace { plan, solve, test, hack, oracle };

std::string to_string(MemoryNamespace ns);
MemoryNamespace namespace_from_string(const std::string& text);

} // namespace solvita
