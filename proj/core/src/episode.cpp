#include "solvita/episode.hpp"

#include <fstream>
#include <sstream>

namespace solvita {

namespace {

std::string effect_kind_name(StoreEffect::Kind kind) {
    switch (kind) {
    case StoreEffect::Kind::item_create: return "item_create";
    case StoreEffect::Kind::item_reward: return "item_reward";
    case StoreEffect::Kind::family_reward: return "family_reward";
    case StoreEffect::Kind::sweep: return "sweep";
    }
    throw std::logic_error("unreachable effect kind");
}

StoreEffect::Kind effect_kind_from_name(const std::string& name) {
    if (name == "item_create") return StoreEffect::Kind::item_create;
    if (name == "item_reward") return StoreEffect::Kind::item_reward;
    if (name == "family_reward") return StoreEffect::Kind::family_reward;
    if (name == "sweep") return StoreEffect::Kind::sweep;
    throw std::invalid_argument("unknown effect kind: " + name);
}

nlohmann::json ctx_to_json(const BanditContext& ctx) {
    nlohmann::json keys = nlohmann::json::array();
    for (const FeatureKey& key : ctx.active_keys) {
        keys.push_back(key.render());
    }
    return {{"active_keys", keys}, {"problem_tags", ctx.problem_tags}};
}

BanditContext ctx_from_json(const nlohmann::json& j) {
    BanditContext ctx;
    for (const auto& rendered : j.at("active_keys")) {
        ctx.active_keys.insert(FeatureKey::parse(rendered.get<std::string>()));
    }
    ctx.problem_tags = j.at("problem_tags").get<std::set<std::string>>();
    return ctx;
}

std::uint64_t fnv64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

} // namespace

nlohmann::json StoreEffect::to_json() const {
    return {{"kind", effect_kind_name(kind)},
            {"namespace", to_string(ns)},
            {"target_id", target_id},
            {"reward", reward},
            {"ctx", ctx_to_json(ctx)},
            {"detail", detail},
            {"success_flag", success_flag}};
}

StoreEffect StoreEffect::from_json(const nlohmann::json& j) {
    StoreEffect effect;
    effect.kind = effect_kind_from_name(j.at("kind").get<std::string>());
    effect.ns = namespace_from_string(j.at("namespace").get<std::string>());
    effect.target_id = j.at("target_id").get<std::string>();
    effect.reward = j.at("reward").get<double>();
    effect.ctx = ctx_from_json(j.at("ctx"));
    effect.detail = j.at("detail");
    effect.success_flag = j.at("success_flag").get<bool>();
    return effect;
}

nlohmann::json PhaseLog::to_json() const {
    nlohmann::json exchanges_json = nlohmann::json::array();
    for (const LlmExchange& exchange : exchanges) {
        exchanges_json.push_back({{"prompt_name", exchange.prompt_name},
                                  {"prompt", exchange.prompt},
                                  {"response", exchange.response}});
    }
    return {{"phase", phase}, {"note", note}, {"exchanges", exchanges_json},
            {"verdicts", verdicts}};
}

PhaseLog PhaseLog::from_json(const nlohmann::json& j) {
    PhaseLog log;
    log.phase = j.at("phase").get<std::string>();
    log.note = j.at("note").get<std::string>();
    for (const auto& e : j.at("exchanges")) {
        log.exchanges.push_back({e.at("prompt_name").get<std::string>(),
                                 e.at("prompt").get<std::string>(),
                                 e.at("response").get<std::string>()});
    }
    log.verdicts = j.at("verdicts");
    return log;
}

nlohmann::json EpisodeRecord::to_json() const {
    nlohmann::json phases_json = nlohmann::json::array();
    for (const PhaseLog& phase : phases) {
        phases_json.push_back(phase.to_json());
    }
    nlohmann::json effects_json = nlohmann::json::array();
    for (const StoreEffect& effect : effects) {
        effects_json.push_back(effect.to_json());
    }
    return {{"format", "solvita.episode"},
            {"version", 1},
            {"problem_id", problem_id},
            {"phases", phases_json},
            {"effects", effects_json},
            {"final_outcome", final_outcome},
            {"solver_iterations", solver_iterations},
            {"hack_rounds", hack_rounds},
            {"break_namespace_writes", break_namespace_writes},
            {"store_digest", store_digest}};
}

nlohmann::json EpisodeRecord::canonical_json() const {
    nlohmann::json j = to_json();
    for (auto& phase : j.at("phases")) {
        for (auto& verdict : phase.at("verdicts")) {
            if (verdict.contains("elapsed_seconds")) {
                verdict["elapsed_seconds"] = 0.0;
            }
        }
    }
    return j;
}

EpisodeRecord EpisodeRecord::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "solvita.episode") {
        throw std::invalid_argument("not an episode record");
    }
    EpisodeRecord record;
    record.problem_id = j.at("problem_id").get<std::string>();
    for (const auto& p : j.at("phases")) {
        record.phases.push_back(PhaseLog::from_json(p));
    }
    for (const auto& e : j.at("effects")) {
        record.effects.push_back(StoreEffect::from_json(e));
    }
    record.final_outcome = j.at("final_outcome").get<std::string>();
    record.solver_iterations = j.at("solver_iterations").get<int>();
    record.hack_rounds = j.at("hack_rounds").get<int>();
    record.break_namespace_writes = j.at("break_namespace_writes").get<std::size_t>();
    record.store_digest = j.at("store_digest").get<std::string>();
    return record;
}

void EpisodeRecord::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write episode record: " + path.string());
    }
    out << to_json().dump(2) << '\n';
}

EpisodeRecord EpisodeRecord::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open episode record: " + path.string());
    }
    nlohmann::json j;
    in >> j;
    return EpisodeRecord::from_json(j);
}

std::string store_state_digest(const MemoryStore& store, const FamilyCatalog& catalog) {
    nlohmann::json doc = nlohmann::json::object();
    for (MemoryNamespace ns : {MemoryNamespace::plan, MemoryNamespace::solve, MemoryNamespace::test,
                               MemoryNamespace::hack, MemoryNamespace::oracle}) {
        nlohmann::json items = nlohmann::json::array();
        for (const MemoryItem& item : store.items(ns)) {
            items.push_back(item.to_json());
        }
        doc[to_string(ns)] = items;
    }
    nlohmann::json families = nlohmann::json::array();
    for (const std::string& id : catalog.ids()) {
        families.push_back(catalog.get(id).to_json());
    }
    doc["families"] = families;

    std::ostringstream hex;
    hex << std::hex << fnv64(doc.dump());
    return hex.str();
}

std::string replay_effects(const EpisodeRecord& record, MemoryStore& store,
                           FamilyCatalog& catalog) {
    for (const StoreEffect& effect : record.effects) {
        switch (effect.kind) {
        case StoreEffect::Kind::item_create: {
            MemoryItem item = MemoryItem::from_json(effect.detail, effect.ns);
            store.add(std::move(item));
            break;
        }
        case StoreEffect::Kind::item_reward:
            store.apply_reward(effect.ns, effect.target_id, effect.reward, effect.ctx);
            break;
        case StoreEffect::Kind::family_reward:
            catalog.apply_reward(effect.target_id, effect.reward, effect.ctx,
                                 effect.success_flag);
            break;
        case StoreEffect::Kind::sweep:
            store.deprecation_sweep(effect.ns);
            break;
        }
    }
    return store_state_digest(store, catalog);
}

} // namespace solvita
