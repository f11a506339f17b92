#pragma once

#include "solvita/embedding.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace solvita {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when an update is attempted with a sample taken before the graph
// last changed.
class StaleSampleError : public GraphError {
public:
    using GraphError::GraphError;
};

// Query layer: a previously encountered problem.
struct QueryNode {
    std::string id;
    std::string statement;
    std::set<std::string> tags;
    Embedding embedding;
};

struct BlockDag {
    struct Block {
        std::string id;
        std::string description;
    };
    std::vector<Block> blocks;
    std::vector<std::pair<std::string, std::string>> edges; // from -> to

    bool is_acyclic() const;
};

enum class MethodKind { contrastive, analysis };

// Method layer: a solution decomposition. Contrastive nodes pair a correct
// and an incorrect solution sharing one approach.
struct MethodNode {
    std::string id;
    MethodKind kind = MethodKind::analysis;
    BlockDag block_dag;
    std::string correct_source;
    std::string incorrect_source;
    std::string divergence;
};

// Skill layer: a reusable annotated technique with a code template.
struct SkillNode {
    std::string id;
    std::string title;
    std::string description;
    std::string code_template;
    std::vector<std::string> block_ids;
};

/// Canonical form for block-identifier matching: lower case, trimmed,
/// internal whitespace runs collapsed to '_'.
std::string normalize_block_id(const std::string& raw);

// Three-layer query-method-skill graph with learned edge weights. Retrieval
// and sampling take shared locks; updates and growth take the write lock.
class QmsGraph {
public:
    struct Params {
        std::size_t top_k_queries = 4;     // activated Q nodes per query
        std::size_t candidate_pool = 20;   // skills kept before sampling
        double temperature = 0.2;          // default sampling temperature
        double initial_qm_weight = 0.5;    // fresh edge weight for grown nodes
        double ms_fallback_threshold = 0.75; // similarity floor for fallback links
        double weight_floor = 1e-6;        // clamp before renormalization
    };

    QmsGraph() = default;
    explicit QmsGraph(Params params) : params_(params) {}

    // Movable for factory-style loading; the mutex itself is not moved and
    // the source must not be in concurrent use.
    QmsGraph(QmsGraph&& other) noexcept { *this = std::move(other); }
    QmsGraph& operator=(QmsGraph&& other) noexcept {
        if (this != &other) {
            params_ = other.params_;
            queries_ = std::move(other.queries_);
            methods_ = std::move(other.methods_);
            skills_ = std::move(other.skills_);
            qm_ = std::move(other.qm_);
            ms_ = std::move(other.ms_);
            version_ = other.version_;
        }
        return *this;
    }

    const Params& params() const { return params_; }

    void add_query(QueryNode node);
    void add_method(MethodNode node);
    void add_skill(SkillNode node);
    void set_qm_weight(const std::string& q, const std::string& m, double w);
    void set_ms_weight(const std::string& m, const std::string& s, double w);

    bool has_query(const std::string& id) const;
    std::size_t query_count() const;
    std::size_t method_count() const;
    std::size_t skill_count() const;
    const SkillNode& skill(const std::string& id) const;
    const MethodNode& method(const std::string& id) const;
    double qm_weight(const std::string& q, const std::string& m) const;
    double ms_weight(const std::string& m, const std::string& s) const;

    /// Checks structural invariants: MS group sums equal 1 within 1e-9,
    /// non-negative weights, acyclic block DAGs, edges reference known nodes.
    void validate() const;

    std::uint64_t version() const;

    static double similarity(const Embedding& a, const Embedding& b) {
        return cosine_similarity(a, b);
    }

    /// Path-aggregated selection score for every skill reachable from the
    /// top-k similar queries: sum over two-hop paths of sim * w_qm * w_ms.
    std::map<std::string, double> skill_scores(const QueryNode& q_new, std::size_t k_q) const;

    struct SampledSkills {
        std::vector<std::string> skills; // draw order
        std::map<std::string, double> scores_used;
        double temperature = 0.2;
        std::uint64_t graph_version = 0;
    };

    /// Sequential softmax(rho / T) sampling without replacement from the
    /// top-`candidate_pool` skills, renormalizing after each draw.
    /// Deterministic for a given seed.
    SampledSkills sample_skills(const std::map<std::string, double>& scores, double temperature,
                                std::size_t n, std::uint64_t rng_seed) const;

    /// Log-probability of drawing `skills` in order under the sequential
    /// softmax policy implied by the current weights.
    double sequence_log_prob(const std::vector<std::string>& skills, const QueryNode& q_new,
                             std::size_t k_q, double temperature) const;

    struct Gradient {
        std::map<std::pair<std::string, std::string>, double> qm;
        std::map<std::pair<std::string, std::string>, double> ms;
    };

    /// Analytic gradient of sequence_log_prob with respect to every edge
    /// weight it depends on.
    Gradient logprob_gradient(const std::vector<std::string>& skills, const QueryNode& q_new,
                              std::size_t k_q, double temperature) const;

    /// Policy-gradient step w += alpha * delta_r * grad(log p), followed by
    /// clamping every touched weight to the floor and renormalizing every
    /// touched MS group to sum 1. Throws StaleSampleError when the graph
    /// changed since the sample was drawn.
    void reinforce_update(const SampledSkills& sampled, const QueryNode& q_new, double delta_r,
                          double alpha);

    struct GrowthArtifacts {
        std::string with_source;    // augmented rollout's final program
        std::string without_source; // bare rollout's final program
        std::string divergence_note;
        BlockDag block_dag;
        std::vector<std::string> block_ids;
        Embedding context_embedding; // used for corpus lookup and fallback links
        // Returns the closest correct corpus solution, if any.
        std::function<std::optional<std::string>(const Embedding&)> nearest_corpus_solution;
        // Optional embedder for similarity-fallback skill linking.
        std::function<Embedding(const std::string&)> embed_text;
    };

    struct GraphDelta {
        std::vector<std::string> added_queries;
        std::vector<std::string> added_methods;
        std::vector<std::string> added_skills;
        std::vector<std::pair<std::string, std::string>> added_qm_edges;
        std::vector<std::pair<std::string, std::string>> added_ms_edges;
        bool analysis_pending = false;

        bool empty() const {
            return added_queries.empty() && added_methods.empty() && added_skills.empty() &&
                   added_qm_edges.empty() && added_ms_edges.empty() && !analysis_pending;
        }
    };

    /// Outcome-driven growth. Both rollouts passing adds nothing; divergent
    /// outcomes pair the two programs in a contrastive node; a double failure
    /// pairs the augmented program with the nearest correct corpus solution
    /// (or records an analysis-pending node when the corpus has none).
    /// Existing contrastive pairs (same source hashes) are never duplicated.
    GraphDelta grow(const QueryNode& q_new, double outcome_with, double outcome_without,
                    const GrowthArtifacts& artifacts);

    void save(const std::filesystem::path& graph_dir) const;
    static QmsGraph load(const std::filesystem::path& graph_dir);
    static QmsGraph load(const std::filesystem::path& graph_dir, Params params);

    std::string stats_summary() const;
    std::string export_dot() const;

private:
    struct Activation {
        std::vector<std::pair<std::string, double>> queries; // (id, similarity)
        std::map<std::string, double> scores;
    };

    Activation activate(const QueryNode& q_new, std::size_t k_q) const;
    std::vector<std::pair<std::string, double>> truncate_pool(
        const std::map<std::string, double>& scores) const;
    void renormalize_ms_group(const std::string& m);
    void bump_version();

    Params params_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, QueryNode> queries_;
    std::map<std::string, MethodNode> methods_;
    std::map<std::string, SkillNode> skills_;
    std::map<std::pair<std::string, std::string>, double> qm_;
    std::map<std::pair<std::string, std::string>, double> ms_;
    std::uint64_t version_ = 0;
};

} // namespace solvita
