#include "solvita/memory_store.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <thread>

namespace solvita {

namespace {

constexpr int kSnapshotVersion = 1;
constexpr const char* kSnapshotFormat = "solvita.memory";

std::int64_t system_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

} // namespace

double score_item(const MemoryItem& item, const BanditContext& ctx) {
    double score = item.bias;
    for (const FeatureKey& key : ctx.active_keys) {
        auto it = item.weights.find(key);
        if (it != item.weights.end()) {
            score += it->second;
        }
    }
    std::size_t overlap = 0;
    for (const std::string& tag : item.tags) {
        if (ctx.problem_tags.count(tag) != 0) {
            ++overlap;
        }
    }
    return score + kTagOverlapBonus * static_cast<double>(overlap);
}

nlohmann::json MemoryItem::to_json() const {
    nlohmann::json weights_json = nlohmann::json::object();
    for (const auto& [key, w] : weights) {
        weights_json[key.render()] = w;
    }
    return {
        {"id", id},
        {"summary", summary},
        {"payload", payload},
        {"tags", tags},
        {"use_count", use_count},
        {"avg_reward", avg_reward},
        {"deprecated", deprecated},
        {"bias", bias},
        {"weights", weights_json},
        {"created_at", created_at},
        {"last_used_at", last_used_at},
    };
}

MemoryItem MemoryItem::from_json(const nlohmann::json& j, MemoryNamespace ns) {
    MemoryItem item;
    item.ns = ns;
    item.id = j.at("id").get<std::string>();
    item.summary = j.at("summary").get<std::string>();
    item.payload = j.at("payload");
    item.tags = j.at("tags").get<std::set<std::string>>();
    item.use_count = j.at("use_count").get<std::uint64_t>();
    item.avg_reward = j.at("avg_reward").get<double>();
    item.deprecated = j.at("deprecated").get<bool>();
    item.bias = j.at("bias").get<double>();
    for (const auto& [rendered, w] : j.at("weights").items()) {
        item.weights[FeatureKey::parse(rendered)] = w.get<double>();
    }
    item.created_at = j.at("created_at").get<std::int64_t>();
    item.last_used_at = j.at("last_used_at").get<std::int64_t>();
    return item;
}

MemoryStore::MemoryStore(std::filesystem::path data_dir, Clock clock)
    : data_dir_(std::move(data_dir)), clock_(clock ? std::move(clock) : Clock(system_now_ms)) {}

void MemoryStore::add(MemoryItem item) {
    std::lock_guard lock(mutex_);
    auto& ns_items = namespaces_[item.ns];
    if (ns_items.count(item.id) != 0) {
        throw MemoryStoreError("duplicate memory item id: " + item.id);
    }
    if (item.created_at == 0) {
        item.created_at = clock_();
    }
    if (item.last_used_at == 0) {
        item.last_used_at = item.created_at;
    }
    ns_items.emplace(item.id, std::move(item));
}

bool MemoryStore::contains(MemoryNamespace ns, const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = namespaces_.find(ns);
    return it != namespaces_.end() && it->second.count(id) != 0;
}

std::optional<MemoryItem> MemoryStore::get(MemoryNamespace ns, const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = namespaces_.find(ns);
    if (it == namespaces_.end()) {
        return std::nullopt;
    }
    auto item_it = it->second.find(id);
    if (item_it == it->second.end()) {
        return std::nullopt;
    }
    return item_it->second;
}

std::vector<MemoryItem> MemoryStore::items(MemoryNamespace ns) const {
    std::lock_guard lock(mutex_);
    std::vector<MemoryItem> out;
    auto it = namespaces_.find(ns);
    if (it == namespaces_.end()) {
        return out;
    }
    out.reserve(it->second.size());
    for (const auto& [id, item] : it->second) {
        out.push_back(item);
    }
    return out;
}

std::size_t MemoryStore::size(MemoryNamespace ns) const {
    std::lock_guard lock(mutex_);
    auto it = namespaces_.find(ns);
    return it == namespaces_.end() ? 0 : it->second.size();
}

std::vector<MemoryItem> MemoryStore::select_advice(MemoryNamespace ns, const BanditContext& ctx,
                                                   std::size_t k, double epsilon,
                                                   std::uint64_t rng_seed) {
    if (k == 0) {
        throw std::invalid_argument("select_advice requires k >= 1");
    }
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    }
    if (ctx.active_keys.empty()) {
        throw std::invalid_argument("bandit context has no active keys");
    }

    std::lock_guard lock(mutex_);
    auto ns_it = namespaces_.find(ns);
    if (ns_it == namespaces_.end()) {
        return {};
    }

    struct Candidate {
        double score;
        const std::string* id;
    };
    std::vector<Candidate> pool;
    for (const auto& [id, item] : ns_it->second) {
        if (!item.deprecated) {
            pool.push_back({score_item(item, ctx), &id});
        }
    }
    // Stable selection order: score descending, then id ascending.
    std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return *a.id < *b.id;
    });

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    std::vector<MemoryItem> selected;
    const std::int64_t now = clock_();
    while (selected.size() < k && !pool.empty()) {
        std::size_t pick = 0;
        if (epsilon > 0.0 && coin(rng) < epsilon) {
            std::uniform_int_distribution<std::size_t> uniform(0, pool.size() - 1);
            pick = uniform(rng);
        }
        MemoryItem& item = ns_it->second.at(*pool[pick].id);
        item.last_used_at = now;
        selected.push_back(item);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return selected;
}

MemoryItem MemoryStore::apply_reward(MemoryNamespace ns, const std::string& id, double reward,
                                     const BanditContext& ctx) {
    if (reward < -1.0 || reward > 1.0) {
        throw std::invalid_argument("reward must lie in [-1, 1]");
    }
    if (ctx.active_keys.empty()) {
        throw std::invalid_argument("bandit context has no active keys");
    }
    std::lock_guard lock(mutex_);
    auto ns_it = namespaces_.find(ns);
    if (ns_it == namespaces_.end()) {
        throw ItemNotFound(id);
    }
    auto item_it = ns_it->second.find(id);
    if (item_it == ns_it->second.end()) {
        throw ItemNotFound(id);
    }
    MemoryItem& item = item_it->second;

    const double residual = reward - score_item(item, ctx);
    const double delta = kBanditLearningRate * residual;
    item.bias += delta;
    for (const FeatureKey& key : ctx.active_keys) {
        item.weights[key] += delta;
    }
    const double n = static_cast<double>(item.use_count);
    item.avg_reward = (item.avg_reward * n + reward) / (n + 1.0);
    item.use_count += 1;
    item.last_used_at = clock_();
    return item;
}

std::size_t MemoryStore::deprecation_sweep(MemoryNamespace ns) {
    std::lock_guard lock(mutex_);
    auto ns_it = namespaces_.find(ns);
    if (ns_it == namespaces_.end()) {
        return 0;
    }
    std::size_t newly = 0;
    for (auto& [id, item] : ns_it->second) {
        if (!item.deprecated && item.use_count >= kDeprecationMinUses &&
            item.avg_reward < kDeprecationRewardFloor) {
            item.deprecated = true;
            ++newly;
        }
    }
    return newly;
}

std::filesystem::path MemoryStore::snapshot_path(MemoryNamespace ns) const {
    return data_dir_ / (to_string(ns) + ".json");
}

void MemoryStore::persist(MemoryNamespace ns) const {
    nlohmann::json items_json = nlohmann::json::array();
    {
        std::lock_guard lock(mutex_);
        auto ns_it = namespaces_.find(ns);
        if (ns_it != namespaces_.end()) {
            for (const auto& [id, item] : ns_it->second) {
                items_json.push_back(item.to_json());
            }
        }
    }
    const nlohmann::json snapshot = {
        {"format", kSnapshotFormat},
        {"version", kSnapshotVersion},
        {"namespace", to_string(ns)},
        {"items", items_json},
    };

    std::filesystem::create_directories(data_dir_);
    const auto target = snapshot_path(ns);
    FileLock lock(target.string() + ".lock");
    const auto tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw MemoryStoreError("cannot open snapshot for write: " + tmp);
        }
        out << snapshot.dump(2) << '\n';
        out.flush();
        if (!out) {
            throw MemoryStoreError("short write on snapshot: " + tmp);
        }
    }
    std::filesystem::rename(tmp, target);
}

void MemoryStore::load(MemoryNamespace ns) {
    const auto target = snapshot_path(ns);
    if (!std::filesystem::exists(target)) {
        std::lock_guard lock(mutex_);
        namespaces_[ns].clear();
        return;
    }

    nlohmann::json snapshot;
    {
        std::ifstream in(target, std::ios::binary);
        if (!in) {
            throw MemoryStoreError("cannot open snapshot: " + target.string());
        }
        try {
            in >> snapshot;
        } catch (const nlohmann::json::exception& e) {
            throw MemoryStoreError("corrupt snapshot " + target.string() + ": " + e.what());
        }
    }
    if (!snapshot.is_object() || snapshot.value("format", "") != kSnapshotFormat) {
        throw MemoryStoreError("corrupt snapshot " + target.string() + ": bad header");
    }
    if (snapshot.value("version", -1) != kSnapshotVersion) {
        throw MemoryStoreError("unsupported snapshot version in " + target.string());
    }
    if (snapshot.value("namespace", "") != to_string(ns)) {
        throw MemoryStoreError("snapshot namespace mismatch in " + target.string());
    }

    std::map<std::string, MemoryItem> loaded;
    try {
        for (const auto& item_json : snapshot.at("items")) {
            MemoryItem item = MemoryItem::from_json(item_json, ns);
            loaded.emplace(item.id, std::move(item));
        }
    } catch (const nlohmann::json::exception& e) {
        throw MemoryStoreError("corrupt snapshot " + target.string() + ": " + e.what());
    }

    std::lock_guard lock(mutex_);
    namespaces_[ns] = std::move(loaded);
}

void MemoryStore::persist_all() const {
    for (MemoryNamespace ns : {MemoryNamespace::plan, MemoryNamespace::solve, MemoryNamespace::test,
                               MemoryNamespace::hack, MemoryNamespace::oracle}) {
        persist(ns);
    }
}

void MemoryStore::load_all() {
    for (MemoryNamespace ns : {MemoryNamespace::plan, MemoryNamespace::solve, MemoryNamespace::test,
                               MemoryNamespace::hack, MemoryNamespace::oracle}) {
        load(ns);
    }
}

FileLock::FileLock(const std::filesystem::path& path, double timeout_seconds) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) {
        throw MemoryStoreError("cannot open lock file: " + path.string());
    }
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    while (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        if (std::chrono::steady_clock::now() >= deadline) {
            ::close(fd_);
            fd_ = -1;
            throw MemoryStoreError("timed out waiting for lock: " + path.string());
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

FileLock::~FileLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

} // namespace solvita
