#include "solvita/qms_graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

namespace solvita {

namespace {

std::uint64_t fnv64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string hex16(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex << value;
    return out.str();
}

} // namespace

bool BlockDag::is_acyclic() const {
    std::map<std::string, std::vector<std::string>> adj;
    std::map<std::string, int> indegree;
    for (const Block& b : blocks) {
        indegree.emplace(b.id, 0);
    }
    for (const auto& [from, to] : edges) {
        if (indegree.count(from) == 0 || indegree.count(to) == 0) {
            return false; // edge references an unknown block
        }
        adj[from].push_back(to);
        ++indegree[to];
    }
    std::queue<std::string> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push(id);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const std::string id = ready.front();
        ready.pop();
        ++visited;
        for (const std::string& next : adj[id]) {
            if (--indegree[next] == 0) ready.push(next);
        }
    }
    return visited == blocks.size();
}

std::string normalize_block_id(const std::string& raw) {
    std::string out;
    bool pending_sep = false;
    for (char c : raw) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '-') {
            if (!out.empty()) pending_sep = true;
            continue;
        }
        if (pending_sep) {
            out.push_back('_');
            pending_sep = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

void QmsGraph::bump_version() { ++version_; }

void QmsGraph::add_query(QueryNode node) {
    std::unique_lock lock(mutex_);
    if (node.embedding.empty() || l2_norm(node.embedding) == 0.0) {
        throw GraphError("query node '" + node.id + "' needs a nonzero embedding");
    }
    if (!queries_.emplace(node.id, std::move(node)).second) {
        throw GraphError("duplicate query node id");
    }
    bump_version();
}

void QmsGraph::add_method(MethodNode node) {
    std::unique_lock lock(mutex_);
    if (!node.block_dag.is_acyclic()) {
        throw GraphError("method node '" + node.id + "' has a cyclic block dag");
    }
    if (node.kind == MethodKind::contrastive &&
        (node.correct_source.empty() || node.incorrect_source.empty())) {
        throw GraphError("contrastive method node '" + node.id + "' must carry both sources");
    }
    if (!methods_.emplace(node.id, std::move(node)).second) {
        throw GraphError("duplicate method node id");
    }
    bump_version();
}

void QmsGraph::add_skill(SkillNode node) {
    std::unique_lock lock(mutex_);
    if (node.code_template.empty()) {
        throw GraphError("skill node '" + node.id + "' has an empty template");
    }
    if (!skills_.emplace(node.id, std::move(node)).second) {
        throw GraphError("duplicate skill node id");
    }
    bump_version();
}

void QmsGraph::set_qm_weight(const std::string& q, const std::string& m, double w) {
    std::unique_lock lock(mutex_);
    if (queries_.count(q) == 0 || methods_.count(m) == 0) {
        throw GraphError("qm edge references unknown node: " + q + " -> " + m);
    }
    if (w < 0.0) {
        throw GraphError("edge weights must be non-negative");
    }
    qm_[{q, m}] = w;
    bump_version();
}

void QmsGraph::set_ms_weight(const std::string& m, const std::string& s, double w) {
    std::unique_lock lock(mutex_);
    if (methods_.count(m) == 0 || skills_.count(s) == 0) {
        throw GraphError("ms edge references unknown node: " + m + " -> " + s);
    }
    if (w < 0.0) {
        throw GraphError("edge weights must be non-negative");
    }
    ms_[{m, s}] = w;
    bump_version();
}

bool QmsGraph::has_query(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return queries_.count(id) != 0;
}

std::size_t QmsGraph::query_count() const {
    std::shared_lock lock(mutex_);
    return queries_.size();
}

std::size_t QmsGraph::method_count() const {
    std::shared_lock lock(mutex_);
    return methods_.size();
}

std::size_t QmsGraph::skill_count() const {
    std::shared_lock lock(mutex_);
    return skills_.size();
}

const SkillNode& QmsGraph::skill(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = skills_.find(id);
    if (it == skills_.end()) throw GraphError("unknown skill: " + id);
    return it->second;
}

const MethodNode& QmsGraph::method(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = methods_.find(id);
    if (it == methods_.end()) throw GraphError("unknown method: " + id);
    return it->second;
}

double QmsGraph::qm_weight(const std::string& q, const std::string& m) const {
    std::shared_lock lock(mutex_);
    auto it = qm_.find({q, m});
    return it == qm_.end() ? 0.0 : it->second;
}

double QmsGraph::ms_weight(const std::string& m, const std::string& s) const {
    std::shared_lock lock(mutex_);
    auto it = ms_.find({m, s});
    return it == ms_.end() ? 0.0 : it->second;
}

std::uint64_t QmsGraph::version() const {
    std::shared_lock lock(mutex_);
    return version_;
}

void QmsGraph::validate() const {
    std::shared_lock lock(mutex_);
    for (const auto& [key, w] : qm_) {
        if (queries_.count(key.first) == 0 || methods_.count(key.second) == 0) {
            throw GraphError("dangling qm edge: " + key.first + " -> " + key.second);
        }
        if (w < 0.0) throw GraphError("negative qm weight");
    }
    std::map<std::string, double> group_sums;
    for (const auto& [key, w] : ms_) {
        if (methods_.count(key.first) == 0 || skills_.count(key.second) == 0) {
            throw GraphError("dangling ms edge: " + key.first + " -> " + key.second);
        }
        if (w < 0.0) throw GraphError("negative ms weight");
        group_sums[key.first] += w;
    }
    for (const auto& [m, sum] : group_sums) {
        if (std::abs(sum - 1.0) > 1e-9) {
            throw GraphError("ms group for '" + m + "' sums to " + std::to_string(sum));
        }
    }
    for (const auto& [id, node] : methods_) {
        if (!node.block_dag.is_acyclic()) {
            throw GraphError("method '" + id + "' has a cyclic block dag");
        }
    }
}

QmsGraph::Activation QmsGraph::activate(const QueryNode& q_new, std::size_t k_q) const {
    Activation activation;
    if (k_q == 0) {
        throw std::invalid_argument("k_q must be >= 1");
    }
    std::vector<std::pair<std::string, double>> sims;
    sims.reserve(queries_.size());
    for (const auto& [id, node] : queries_) {
        sims.emplace_back(id, similarity(q_new.embedding, node.embedding));
    }
    std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (sims.size() > k_q) {
        sims.resize(k_q);
    }
    activation.queries = sims;

    std::map<std::string, double> qm_flow; // method -> sum over activated q of sim * w_qm
    for (const auto& [q_id, sim] : activation.queries) {
        auto it = qm_.lower_bound({q_id, std::string()});
        for (; it != qm_.end() && it->first.first == q_id; ++it) {
            qm_flow[it->first.second] += sim * it->second;
        }
    }
    for (const auto& [m_id, flow] : qm_flow) {
        auto it = ms_.lower_bound({m_id, std::string()});
        for (; it != ms_.end() && it->first.first == m_id; ++it) {
            activation.scores[it->first.second] += flow * it->second;
        }
    }
    return activation;
}

std::map<std::string, double> QmsGraph::skill_scores(const QueryNode& q_new,
                                                     std::size_t k_q) const {
    std::shared_lock lock(mutex_);
    return activate(q_new, k_q).scores;
}

std::vector<std::pair<std::string, double>> QmsGraph::truncate_pool(
    const std::map<std::string, double>& scores) const {
    std::vector<std::pair<std::string, double>> pool(scores.begin(), scores.end());
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (pool.size() > params_.candidate_pool) {
        pool.resize(params_.candidate_pool);
    }
    return pool;
}

QmsGraph::SampledSkills QmsGraph::sample_skills(const std::map<std::string, double>& scores,
                                                double temperature, std::size_t n,
                                                std::uint64_t rng_seed) const {
    if (temperature <= 0.0) {
        throw std::invalid_argument("temperature must be positive");
    }
    std::shared_lock lock(mutex_);
    SampledSkills result;
    result.scores_used = scores;
    result.temperature = temperature;
    result.graph_version = version_;

    auto remaining = truncate_pool(scores);
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    while (!remaining.empty() && result.skills.size() < n) {
        double max_rho = remaining.front().second;
        for (const auto& [id, rho] : remaining) {
            max_rho = std::max(max_rho, rho);
        }
        std::vector<double> mass(remaining.size());
        double total = 0.0;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            mass[i] = std::exp((remaining[i].second - max_rho) / temperature);
            total += mass[i];
        }
        const double u = uniform(rng) * total;
        double acc = 0.0;
        std::size_t pick = remaining.size() - 1;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            acc += mass[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        result.skills.push_back(remaining[pick].first);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return result;
}

namespace {

struct LogProbResult {
    double log_prob = 0.0;
    std::map<std::string, double> rho_gradient; // d log p / d rho(s) over the pool
};

LogProbResult pool_log_prob(const std::vector<std::pair<std::string, double>>& pool,
                            const std::vector<std::string>& sequence, double temperature) {
    LogProbResult result;
    for (const auto& [id, rho] : pool) {
        result.rho_gradient[id] = 0.0;
    }
    auto remaining = pool;
    for (const std::string& chosen : sequence) {
        auto it = std::find_if(remaining.begin(), remaining.end(),
                               [&](const auto& entry) { return entry.first == chosen; });
        if (it == remaining.end()) {
            throw GraphError("sampled skill '" + chosen + "' is not in the candidate pool");
        }
        double max_rho = remaining.front().second;
        for (const auto& [id, rho] : remaining) {
            max_rho = std::max(max_rho, rho);
        }
        double total = 0.0;
        std::vector<double> mass(remaining.size());
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            mass[i] = std::exp((remaining[i].second - max_rho) / temperature);
            total += mass[i];
        }
        result.log_prob += (it->second - max_rho) / temperature - std::log(total);
        // d log p_t / d rho(u) = (1[u = chosen] - pi_t(u)) / T for u still in play
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            const double pi = mass[i] / total;
            double& g = result.rho_gradient[remaining[i].first];
            g -= pi / temperature;
            if (remaining[i].first == chosen) {
                g += 1.0 / temperature;
            }
        }
        remaining.erase(it);
    }
    return result;
}

} // namespace

double QmsGraph::sequence_log_prob(const std::vector<std::string>& skills, const QueryNode& q_new,
                                   std::size_t k_q, double temperature) const {
    std::shared_lock lock(mutex_);
    const Activation activation = activate(q_new, k_q);
    return pool_log_prob(truncate_pool(activation.scores), skills, temperature).log_prob;
}

QmsGraph::Gradient QmsGraph::logprob_gradient(const std::vector<std::string>& skills,
                                              const QueryNode& q_new, std::size_t k_q,
                                              double temperature) const {
    std::shared_lock lock(mutex_);
    const Activation activation = activate(q_new, k_q);
    const auto pool = truncate_pool(activation.scores);
    const auto rho_grad = pool_log_prob(pool, skills, temperature).rho_gradient;

    Gradient grad;
    std::map<std::string, double> qm_flow;
    for (const auto& [q_id, sim] : activation.queries) {
        auto it = qm_.lower_bound({q_id, std::string()});
        for (; it != qm_.end() && it->first.first == q_id; ++it) {
            qm_flow[it->first.second] += sim * it->second;
        }
    }
    // d rho(s) / d w_qm(q, m) = sim(q) * w_ms(m, s); accumulate over pool skills.
    for (const auto& [q_id, sim] : activation.queries) {
        auto it = qm_.lower_bound({q_id, std::string()});
        for (; it != qm_.end() && it->first.first == q_id; ++it) {
            const std::string& m_id = it->first.second;
            double acc = 0.0;
            auto ms_it = ms_.lower_bound({m_id, std::string()});
            for (; ms_it != ms_.end() && ms_it->first.first == m_id; ++ms_it) {
                auto g = rho_grad.find(ms_it->first.second);
                if (g != rho_grad.end()) {
                    acc += g->second * sim * ms_it->second;
                }
            }
            if (acc != 0.0) {
                grad.qm[{q_id, m_id}] += acc;
            }
        }
    }
    // d rho(s) / d w_ms(m, s) = sum over activated q of sim(q) * w_qm(q, m).
    for (const auto& [m_id, flow] : qm_flow) {
        auto ms_it = ms_.lower_bound({m_id, std::string()});
        for (; ms_it != ms_.end() && ms_it->first.first == m_id; ++ms_it) {
            auto g = rho_grad.find(ms_it->first.second);
            if (g != rho_grad.end() && g->second != 0.0 && flow != 0.0) {
                grad.ms[{m_id, ms_it->first.second}] = g->second * flow;
            }
        }
    }
    return grad;
}

void QmsGraph::renormalize_ms_group(const std::string& m) {
    double sum = 0.0;
    auto begin = ms_.lower_bound({m, std::string()});
    auto it = begin;
    for (; it != ms_.end() && it->first.first == m; ++it) {
        sum += it->second;
    }
    if (sum <= 0.0) {
        return;
    }
    for (it = begin; it != ms_.end() && it->first.first == m; ++it) {
        it->second /= sum;
    }
}

void QmsGraph::reinforce_update(const SampledSkills& sampled, const QueryNode& q_new,
                                double delta_r, double alpha) {
    if (std::abs(delta_r) > 1.0) {
        throw std::invalid_argument("|delta_r| must be <= 1");
    }
    std::unique_lock lock(mutex_);
    if (sampled.graph_version != version_) {
        throw StaleSampleError("graph changed since the skill sample was drawn");
    }
    if (delta_r == 0.0 || sampled.skills.empty()) {
        return;
    }

    const Activation activation = activate(q_new, params_.top_k_queries);
    const auto pool = truncate_pool(activation.scores);
    const auto rho_grad = pool_log_prob(pool, sampled.skills, sampled.temperature).rho_gradient;

    std::map<std::string, double> qm_flow;
    for (const auto& [q_id, sim] : activation.queries) {
        auto it = qm_.lower_bound({q_id, std::string()});
        for (; it != qm_.end() && it->first.first == q_id; ++it) {
            qm_flow[it->first.second] += sim * it->second;
        }
    }

    const double step = alpha * delta_r;
    std::set<std::string> touched_groups;

    std::map<std::pair<std::string, std::string>, double> qm_updates;
    for (const auto& [q_id, sim] : activation.queries) {
        auto it = qm_.lower_bound({q_id, std::string()});
        for (; it != qm_.end() && it->first.first == q_id; ++it) {
            const std::string& m_id = it->first.second;
            double acc = 0.0;
            auto ms_it = ms_.lower_bound({m_id, std::string()});
            for (; ms_it != ms_.end() && ms_it->first.first == m_id; ++ms_it) {
                auto g = rho_grad.find(ms_it->first.second);
                if (g != rho_grad.end()) {
                    acc += g->second * sim * ms_it->second;
                }
            }
            if (acc != 0.0) {
                qm_updates[it->first] += step * acc;
            }
        }
    }
    std::map<std::pair<std::string, std::string>, double> ms_updates;
    for (const auto& [m_id, flow] : qm_flow) {
        auto ms_it = ms_.lower_bound({m_id, std::string()});
        for (; ms_it != ms_.end() && ms_it->first.first == m_id; ++ms_it) {
            auto g = rho_grad.find(ms_it->first.second);
            if (g != rho_grad.end() && g->second != 0.0 && flow != 0.0) {
                ms_updates[ms_it->first] = step * g->second * flow;
            }
        }
    }

    for (const auto& [key, delta] : qm_updates) {
        double& w = qm_[key];
        w = std::max(w + delta, params_.weight_floor);
    }
    for (const auto& [key, delta] : ms_updates) {
        double& w = ms_[key];
        w = std::max(w + delta, params_.weight_floor);
        touched_groups.insert(key.first);
    }
    for (const std::string& m : touched_groups) {
        renormalize_ms_group(m);
    }
    bump_version();
}

QmsGraph::GraphDelta QmsGraph::grow(const QueryNode& q_new, double outcome_with,
                                    double outcome_without, const GrowthArtifacts& artifacts) {
    if (outcome_with < 0.0 || outcome_with > 1.0 || outcome_without < 0.0 ||
        outcome_without > 1.0) {
        throw std::invalid_argument("pass rates must lie in [0, 1]");
    }
    std::unique_lock lock(mutex_);
    GraphDelta delta;

    const bool with_ok = outcome_with >= 1.0;
    const bool without_ok = outcome_without >= 1.0;
    if (with_ok && without_ok) {
        return delta;
    }

    MethodKind kind = MethodKind::contrastive;
    std::string correct;
    std::string incorrect;
    std::string note = artifacts.divergence_note;
    if (with_ok != without_ok) {
        correct = with_ok ? artifacts.with_source : artifacts.without_source;
        incorrect = with_ok ? artifacts.without_source : artifacts.with_source;
    } else {
        // Both failed: pair the augmented program with the nearest correct
        // corpus solution, or fall back to an analysis-pending record.
        std::optional<std::string> corpus;
        if (artifacts.nearest_corpus_solution) {
            corpus = artifacts.nearest_corpus_solution(artifacts.context_embedding);
        }
        if (corpus.has_value()) {
            correct = *corpus;
            incorrect = artifacts.with_source;
        } else {
            kind = MethodKind::analysis;
            incorrect = artifacts.with_source;
            if (note.empty()) {
                note = "analysis pending: no correct corpus solution available";
            }
            delta.analysis_pending = true;
        }
    }

    if (kind == MethodKind::contrastive) {
        const std::uint64_t correct_hash = fnv64(correct);
        const std::uint64_t incorrect_hash = fnv64(incorrect);
        for (const auto& [id, node] : methods_) {
            if (node.kind == MethodKind::contrastive &&
                fnv64(node.correct_source) == correct_hash &&
                fnv64(node.incorrect_source) == incorrect_hash) {
                delta.analysis_pending = false;
                return {};
            }
        }
    }
    if (!artifacts.block_dag.is_acyclic()) {
        throw GraphError("growth artifacts carry a cyclic block dag");
    }

    if (queries_.count(q_new.id) == 0) {
        if (q_new.embedding.empty() || l2_norm(q_new.embedding) == 0.0) {
            throw GraphError("growth requires q_new to carry a nonzero embedding");
        }
        queries_.emplace(q_new.id, q_new);
        delta.added_queries.push_back(q_new.id);
    }

    const std::string method_id =
        std::string(kind == MethodKind::contrastive ? "m-con-" : "m-pend-") +
        hex16(fnv64(correct + "\x1f" + incorrect + "\x1f" + q_new.id));
    if (methods_.count(method_id) != 0) {
        return {};
    }

    MethodNode node;
    node.id = method_id;
    node.kind = kind;
    node.block_dag = artifacts.block_dag;
    node.correct_source = correct;
    node.incorrect_source = incorrect;
    node.divergence = note;
    methods_.emplace(method_id, std::move(node));
    delta.added_methods.push_back(method_id);

    qm_[{q_new.id, method_id}] = params_.initial_qm_weight;
    delta.added_qm_edges.emplace_back(q_new.id, method_id);

    // Link skills by normalized block-identifier match, falling back to
    // embedding similarity when no identifier matches.
    std::set<std::string> wanted;
    for (const std::string& raw : artifacts.block_ids) {
        wanted.insert(normalize_block_id(raw));
    }
    for (const BlockDag::Block& b : artifacts.block_dag.blocks) {
        wanted.insert(normalize_block_id(b.id));
    }
    std::vector<std::string> linked;
    for (const auto& [s_id, skill] : skills_) {
        for (const std::string& raw : skill.block_ids) {
            if (wanted.count(normalize_block_id(raw)) != 0) {
                linked.push_back(s_id);
                break;
            }
        }
    }
    if (linked.empty() && artifacts.embed_text && !artifacts.context_embedding.empty()) {
        for (const auto& [s_id, skill] : skills_) {
            const Embedding skill_embedding = artifacts.embed_text(skill.description);
            if (cosine_similarity(artifacts.context_embedding, skill_embedding) >=
                params_.ms_fallback_threshold) {
                linked.push_back(s_id);
            }
        }
    }
    if (!linked.empty()) {
        const double uniform = 1.0 / static_cast<double>(linked.size());
        for (const std::string& s_id : linked) {
            ms_[{method_id, s_id}] = uniform;
            delta.added_ms_edges.emplace_back(method_id, s_id);
        }
    }

    bump_version();
    return delta;
}

void QmsGraph::save(const std::filesystem::path& graph_dir) const {
    std::shared_lock lock(mutex_);
    std::filesystem::create_directories(graph_dir);

    nlohmann::json queries = nlohmann::json::array();
    for (const auto& [id, node] : queries_) {
        queries.push_back({{"id", node.id},
                           {"statement", node.statement},
                           {"tags", node.tags},
                           {"embedding", node.embedding}});
    }
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& [id, node] : methods_) {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : node.block_dag.blocks) {
            blocks.push_back({{"id", b.id}, {"description", b.description}});
        }
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [from, to] : node.block_dag.edges) {
            edges.push_back({from, to});
        }
        methods.push_back(
            {{"id", node.id},
             {"kind", node.kind == MethodKind::contrastive ? "contrastive" : "analysis"},
             {"block_dag", {{"blocks", blocks}, {"edges", edges}}},
             {"correct_source", node.correct_source},
             {"incorrect_source", node.incorrect_source},
             {"divergence", node.divergence}});
    }
    nlohmann::json skills = nlohmann::json::array();
    for (const auto& [id, node] : skills_) {
        skills.push_back({{"id", node.id},
                          {"title", node.title},
                          {"description", node.description},
                          {"code_template", node.code_template},
                          {"block_ids", node.block_ids}});
    }
    nlohmann::json nodes_doc = {{"format", "solvita.graph.nodes"},
                                {"version", 1},
                                {"queries", queries},
                                {"methods", methods},
                                {"skills", skills}};

    nlohmann::json qm = nlohmann::json::array();
    for (const auto& [key, w] : qm_) {
        qm.push_back({{"q", key.first}, {"m", key.second}, {"w", w}});
    }
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& [key, w] : ms_) {
        ms.push_back({{"m", key.first}, {"s", key.second}, {"w", w}});
    }
    nlohmann::json weights_doc = {
        {"format", "solvita.graph.weights"}, {"version", 1}, {"qm", qm}, {"ms", ms}};

    auto write = [](const std::filesystem::path& path, const nlohmann::json& doc) {
        const std::string tmp = path.string() + ".tmp";
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) {
            throw GraphError("cannot write " + path.string());
        }
        out << doc.dump(2) << '\n';
        out.close();
        std::filesystem::rename(tmp, path);
    };
    write(graph_dir / "nodes.json", nodes_doc);
    write(graph_dir / "weights.json", weights_doc);
}

QmsGraph QmsGraph::load(const std::filesystem::path& graph_dir) {
    return load(graph_dir, Params());
}

QmsGraph QmsGraph::load(const std::filesystem::path& graph_dir, Params params) {
    auto read = [](const std::filesystem::path& path, const char* format) {
        std::ifstream in(path);
        if (!in) {
            throw GraphError("cannot open " + path.string());
        }
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw GraphError("corrupt graph file " + path.string() + ": " + e.what());
        }
        if (doc.value("format", "") != format) {
            throw GraphError("unexpected format header in " + path.string());
        }
        return doc;
    };

    const nlohmann::json nodes_doc = read(graph_dir / "nodes.json", "solvita.graph.nodes");
    const nlohmann::json weights_doc = read(graph_dir / "weights.json", "solvita.graph.weights");

    QmsGraph graph(params);
    for (const auto& j : nodes_doc.at("queries")) {
        QueryNode node;
        node.id = j.at("id").get<std::string>();
        node.statement = j.at("statement").get<std::string>();
        node.tags = j.at("tags").get<std::set<std::string>>();
        node.embedding = j.at("embedding").get<Embedding>();
        graph.add_query(std::move(node));
    }
    for (const auto& j : nodes_doc.at("skills")) {
        SkillNode node;
        node.id = j.at("id").get<std::string>();
        node.title = j.at("title").get<std::string>();
        node.description = j.at("description").get<std::string>();
        node.code_template = j.at("code_template").get<std::string>();
        node.block_ids = j.at("block_ids").get<std::vector<std::string>>();
        graph.add_skill(std::move(node));
    }
    for (const auto& j : nodes_doc.at("methods")) {
        MethodNode node;
        node.id = j.at("id").get<std::string>();
        node.kind = j.at("kind").get<std::string>() == "contrastive" ? MethodKind::contrastive
                                                                     : MethodKind::analysis;
        for (const auto& b : j.at("block_dag").at("blocks")) {
            node.block_dag.blocks.push_back(
                {b.at("id").get<std::string>(), b.at("description").get<std::string>()});
        }
        for (const auto& e : j.at("block_dag").at("edges")) {
            node.block_dag.edges.emplace_back(e.at(0).get<std::string>(),
                                              e.at(1).get<std::string>());
        }
        node.correct_source = j.at("correct_source").get<std::string>();
        node.incorrect_source = j.at("incorrect_source").get<std::string>();
        node.divergence = j.at("divergence").get<std::string>();
        graph.add_method(std::move(node));
    }
    for (const auto& j : weights_doc.at("qm")) {
        graph.set_qm_weight(j.at("q").get<std::string>(), j.at("m").get<std::string>(),
                            j.at("w").get<double>());
    }
    for (const auto& j : weights_doc.at("ms")) {
        graph.set_ms_weight(j.at("m").get<std::string>(), j.at("s").get<std::string>(),
                            j.at("w").get<double>());
    }
    graph.validate();
    return graph;
}

std::string QmsGraph::stats_summary() const {
    std::shared_lock lock(mutex_);
    std::size_t contrastive = 0;
    for (const auto& [id, node] : methods_) {
        if (node.kind == MethodKind::contrastive) ++contrastive;
    }
    std::ostringstream out;
    out << "queries=" << queries_.size() << " methods=" << methods_.size() << " (contrastive="
        << contrastive << ") skills=" << skills_.size() << " qm_edges=" << qm_.size()
        << " ms_edges=" << ms_.size() << " version=" << version_;
    return out.str();
}

std::string QmsGraph::export_dot() const {
    std::shared_lock lock(mutex_);
    std::ostringstream out;
    out << "digraph qms {\n  rankdir=TB;\n";
    for (const auto& [id, node] : queries_) {
        out << "  \"q:" << id << "\" [shape=box];\n";
    }
    for (const auto& [id, node] : methods_) {
        out << "  \"m:" << id << "\" [shape=ellipse,style="
            << (node.kind == MethodKind::contrastive ? "solid" : "dashed") << "];\n";
    }
    for (const auto& [id, node] : skills_) {
        out << "  \"s:" << id << "\" [shape=hexagon];\n";
    }
    out.setf(std::ios::fixed);
    out.precision(4);
    for (const auto& [key, w] : qm_) {
        out << "  \"q:" << key.first << "\" -> \"m:" << key.second << "\" [label=" << w << "];\n";
    }
    for (const auto& [key, w] : ms_) {
        out << "  \"m:" << key.first << "\" -> \"s:" << key.second << "\" [label=" << w << "];\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace solvita
