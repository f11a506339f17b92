#pragma once

#include "solvita/embedding.hpp"
#include "solvita/problem.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace solvita {

/// Table-driven normalization of a platform-native difficulty onto the
/// Codeforces-scale band. Codeforces ratings pass through as point bands;
/// AtCoder slots and LeetCode labels map to their coarse bands. Unknown
/// values return nullopt (such records then fail completeness).
std::optional<DifficultyBand> map_difficulty(Platform platform, const std::string& native_value);

struct StageReport {
    std::string stage;
    std::size_t records_in = 0;
    std::size_t records_out = 0;
    std::map<std::string, std::size_t> dropped_by_reason;
    std::map<std::string, std::size_t> per_platform_out;

    nlohmann::json to_json() const;
};

// Stage-by-stage accounting; counts telescope (stage N out = stage N+1 in).
struct FilterReport {
    std::size_t raw_count = 0;
    std::map<std::string, std::size_t> per_platform_raw;
    std::vector<StageReport> stages;
    std::map<std::string, std::size_t> per_tag_final;

    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;
};

struct PipelineConfig {
    std::size_t tag_cap = 2300;          // per-tag cap before subsampling
    double duplicate_threshold = 0.93;   // strict > comparison
    std::uint64_t rng_seed = 1;
    // Per-tag difficulty-floor overrides; tags without an entry use the 5th
    // percentile of their post-dedup difficulty distribution.
    std::map<std::string, int> floor_overrides;
};

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Four sequential corpus filters over unified-schema records: completeness,
// tag load balancing, embedding deduplication, per-tag difficulty pruning.
// Deterministic for a fixed (records, seed, embedder) triple.
class DataPipeline {
public:
    DataPipeline(EmbedderPort& embedder, PipelineConfig config = {});

    /// Normalizes the difficulty field from the native value when absent.
    /// Keeps records carrying public and hidden tests, tags, a mappable
    /// difficulty signal, and a non-empty constraints spec.
    std::vector<ProblemRecord> filter_completeness(std::vector<ProblemRecord> records,
                                                   StageReport& report) const;

    /// Caps every tag at the configured limit by difficulty-stratified
    /// uniform subsampling; a record is dropped only when removed from every
    /// tag it carries.
    std::vector<ProblemRecord> balance_tags(std::vector<ProblemRecord> records,
                                            StageReport& report) const;

    /// Collapses connected components of the above-threshold similarity
    /// graph (built within tag buckets) to the variant with more submissions,
    /// then the larger test set, then the smaller id.
    std::vector<ProblemRecord> dedup(std::vector<ProblemRecord> records,
                                     StageReport& report) const;

    /// Drops a record only when its difficulty sits below the floor of every
    /// tag it carries. Band comparisons use the band's upper edge.
    std::vector<ProblemRecord> prune_difficulty(std::vector<ProblemRecord> records,
                                                StageReport& report) const;

    struct Result {
        std::vector<ProblemRecord> survivors;
        FilterReport report;
    };

    /// Runs stages [1..last_stage] in order (1 = completeness ... 4 = prune).
    Result run(std::vector<ProblemRecord> records, int last_stage = 4) const;

    const PipelineConfig& config() const { return config_; }

    /// Nearest-rank percentile used for tag floors.
    static int percentile_floor(std::vector<int> values, double percentile = 0.05);

private:
    EmbedderPort& embedder_;
    PipelineConfig config_;
};

} // namespace solvita
