#pragma once

#include "solvita/feature_key.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

namespace solvita {

inline constexpr double kBanditLearningRate = 0.01;
inline constexpr double kTagOverlapBonus = 0.05;
inline constexpr double kDeprecationRewardFloor = -0.3;
inline constexpr std::uint64_t kDeprecationMinUses = 20;

// One bandit-scored knowledge entry. Immutable once handed to callers;
// all mutation goes through the owning store.
struct MemoryItem {
    std::string id;
    MemoryNamespace ns = MemoryNamespace::plan;
    std::string summary;
    nlohmann::json payload;
    std::set<std::string> tags;
    std::uint64_t use_count = 0;
    double avg_reward = 0.0;
    bool deprecated = false;
    double bias = 0.0;
    std::map<FeatureKey, double> weights;
    std::int64_t created_at = 0;
    std::int64_t last_used_at = 0;

    nlohmann::json to_json() const;
    static MemoryItem from_json(const nlohmann::json& j, MemoryNamespace ns);
    bool operator==(const MemoryItem&) const = default;
};

/// Linear bandit score: bias + sum of weights on active keys (missing keys
/// contribute 0) + 0.05 per tag shared with the context.
double score_item(const MemoryItem& item, const BanditContext& ctx);

class MemoryStoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ItemNotFound : public MemoryStoreError {
public:
    explicit ItemNotFound(const std::string& id)
        : MemoryStoreError("memory item not found: " + id) {}
};

// Namespaced contextual-bandit store shared by all agents. Many concurrent
// readers; all writes serialize through the store mutex, and snapshot files
// serialize through a per-namespace exclusive file lock.
class MemoryStore {
public:
    using Clock = std::function<std::int64_t()>;

    explicit MemoryStore(std::filesystem::path data_dir, Clock clock = {});

    const std::filesystem::path& data_dir() const { return data_dir_; }

    /// Inserts the item; throws if the id already exists in the namespace.
    void add(MemoryItem item);
    bool contains(MemoryNamespace ns, const std::string& id) const;
    std::optional<MemoryItem> get(MemoryNamespace ns, const std::string& id) const;
    std::vector<MemoryItem> items(MemoryNamespace ns) const;
    std::size_t size(MemoryNamespace ns) const;

    /// Epsilon-greedy advice selection. Per slot: with probability 1-epsilon
    /// the best-scoring remaining item (ties by (score desc, id asc)), with
    /// probability epsilon a uniformly random remaining item. Deprecated items
    /// never appear. Deterministic for a given seed. Touches last_used_at.
    std::vector<MemoryItem> select_advice(MemoryNamespace ns, const BanditContext& ctx,
                                          std::size_t k, double epsilon,
                                          std::uint64_t rng_seed);

    /// Residual bandit update: delta = alpha * (reward - score before update)
    /// applied to the bias and every active key. Updates the running reward
    /// mean and the use count. Throws ItemNotFound for unknown ids.
    MemoryItem apply_reward(MemoryNamespace ns, const std::string& id, double reward,
                            const BanditContext& ctx);

    /// Deprecates every item with use_count >= 20 and avg_reward < -0.3
    /// (strict). Returns the number of newly deprecated items.
    std::size_t deprecation_sweep(MemoryNamespace ns);

    /// Writes the namespace snapshot atomically (tmp file + rename) under an
    /// exclusive file lock. Throws on lock timeout.
    void persist(MemoryNamespace ns) const;

    /// Replaces the in-memory namespace with the snapshot contents. A corrupt
    /// snapshot throws and leaves the in-memory state untouched. A missing
    /// snapshot loads an empty namespace.
    void load(MemoryNamespace ns);

    void persist_all() const;
    void load_all();

    std::filesystem::path snapshot_path(MemoryNamespace ns) const;

private:
    std::filesystem::path data_dir_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<MemoryNamespace, std::map<std::string, MemoryItem>> namespaces_;
};

// Serializes writers on a lock file via flock(2). Blocks up to the timeout.
class FileLock {
public:
    FileLock(const std::filesystem::path& path, double timeout_seconds = 10.0);
    ~FileLock();
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace solvita
