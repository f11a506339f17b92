#pragma once

#include "solvita/feature_key.hpp"
#include "solvita/memory_store.hpp"
#include "solvita/oracle.hpp"
#include "solvita/sandbox.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace solvita {

// One auditable store mutation. Every reward or item written during an
// episode lands here; replaying the effect list against fresh stores
// reproduces the episode-final store state.
struct StoreEffect {
    enum class Kind { item_create, item_reward, family_reward, sweep };

    Kind kind = Kind::item_reward;
    MemoryNamespace ns = MemoryNamespace::plan;
    std::string target_id;
    double reward = 0.0;
    BanditContext ctx;
    nlohmann::json detail; // item fields for creates, free-form notes otherwise
    bool success_flag = false;

    nlohmann::json to_json() const;
    static StoreEffect from_json(const nlohmann::json& j);
};

struct LlmExchange {
    std::string prompt_name;
    std::string prompt;
    std::string response;
};

struct PhaseLog {
    std::string phase;
    std::string note;
    std::vector<LlmExchange> exchanges;
    nlohmann::json verdicts = nlohmann::json::array();

    nlohmann::json to_json() const;
    static PhaseLog from_json(const nlohmann::json& j);
};

// Full episode trace: per-phase transcript, verdicts, and the ordered store
// effects needed to reproduce the final store states.
struct EpisodeRecord {
    std::string problem_id;
    std::vector<PhaseLog> phases;
    std::vector<StoreEffect> effects;
    std::string final_outcome;
    int solver_iterations = 0;
    int hack_rounds = 0;
    std::size_t break_namespace_writes = 0;
    std::string store_digest; // canonical digest of stores + catalog at finalize

    nlohmann::json to_json() const;
    /// to_json with measured wall times zeroed; two runs of the same scripted
    /// scenario agree on this form exactly.
    nlohmann::json canonical_json() const;
    static EpisodeRecord from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static EpisodeRecord load(const std::filesystem::path& path);
};

/// Canonical digest over every namespace of the store plus the family
/// catalog; replay equality is checked against this.
std::string store_state_digest(const MemoryStore& store, const FamilyCatalog& catalog);

/// Applies the record's effects, in order, to fresh stores. Returns the
/// resulting digest for comparison with record.store_digest.
std::string replay_effects(const EpisodeRecord& record, MemoryStore& store,
                           FamilyCatalog& catalog);

} // namespace solvita
