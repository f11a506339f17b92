#include "solvita/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace solvita {

namespace {

std::optional<int> parse_int(const std::string& text) {
    if (text.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const int value = std::stoi(text, &used);
        if (used != text.size()) return std::nullopt;
        return value;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::uint64_t fnv64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

struct UnionFind {
    std::vector<std::size_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace

std::optional<DifficultyBand> map_difficulty(Platform platform, const std::string& native_value) {
    if (platform == Platform::atcoder) {
        if (native_value == "ABC-A" || native_value == "ABC-B") return DifficultyBand{800, 800};
        if (native_value == "ABC-C") return DifficultyBand{900, 1100};
        if (native_value == "ABC-D") return DifficultyBand{1200, 1300};
        if (native_value == "ABC-E") return DifficultyBand{1400, 1600};
        if (native_value == "ABC-F") return DifficultyBand{1700, 1900};
        if (native_value == "ABC-G" || native_value == "ARC" || native_value == "AGC") {
            return DifficultyBand{1900, kDifficultyScaleMax};
        }
    }
    if (platform == Platform::leetcode) {
        if (native_value == "Easy") return DifficultyBand{800, 900};
        if (native_value == "Medium") return DifficultyBand{1000, 1600};
        if (native_value == "Hard") return DifficultyBand{1500, kDifficultyScaleMax};
    }
    // Numeric ratings pass through unchanged (Codeforces natively; other
    // platforms when the record arrives already normalized).
    if (const auto value = parse_int(native_value)) {
        if (*value >= kDifficultyScaleMin && *value <= kDifficultyScaleMax) {
            return DifficultyBand{*value, *value};
        }
    }
    return std::nullopt;
}

nlohmann::json StageReport::to_json() const {
    return {{"stage", stage},
            {"records_in", records_in},
            {"records_out", records_out},
            {"dropped_by_reason", dropped_by_reason},
            {"per_platform_out", per_platform_out}};
}

nlohmann::json FilterReport::to_json() const {
    nlohmann::json stages_json = nlohmann::json::array();
    for (const StageReport& stage : stages) {
        stages_json.push_back(stage.to_json());
    }
    return {{"format", "solvita.filter_report"},
            {"version", 1},
            {"raw_count", raw_count},
            {"per_platform_raw", per_platform_raw},
            {"stages", stages_json},
            {"per_tag_final", per_tag_final}};
}

void FilterReport::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw PipelineError("cannot write report: " + path.string());
    }
    out << to_json().dump(2) << '\n';
}

DataPipeline::DataPipeline(EmbedderPort& embedder, PipelineConfig config)
    : embedder_(embedder), config_(std::move(config)) {}

namespace {

void count_platforms(const std::vector<ProblemRecord>& records,
                     std::map<std::string, std::size_t>& out) {
    for (const ProblemRecord& r : records) {
        ++out[to_string(r.platform)];
    }
}

} // namespace

std::vector<ProblemRecord> DataPipeline::filter_completeness(std::vector<ProblemRecord> records,
                                                             StageReport& report) const {
    report.stage = "completeness";
    report.records_in = records.size();
    std::vector<ProblemRecord> survivors;
    survivors.reserve(records.size());
    for (ProblemRecord& record : records) {
        if (!record.difficulty.has_value()) {
            record.difficulty = map_difficulty(record.platform, record.native_difficulty);
        }
        const char* reason = nullptr;
        if (record.public_tests.empty()) {
            reason = "missing_public_tests";
        } else if (record.hidden_tests.empty()) {
            reason = "missing_hidden_tests";
        } else if (record.tags.empty()) {
            reason = "missing_tags";
        } else if (!record.difficulty.has_value()) {
            reason = "no_difficulty_signal";
        } else if (record.constraints.is_null() ||
                   (record.constraints.is_object() && record.constraints.empty())) {
            reason = "missing_io_spec";
        }
        if (reason != nullptr) {
            ++report.dropped_by_reason[reason];
            continue;
        }
        survivors.push_back(std::move(record));
    }
    report.records_out = survivors.size();
    count_platforms(survivors, report.per_platform_out);
    return survivors;
}

std::vector<ProblemRecord> DataPipeline::balance_tags(std::vector<ProblemRecord> records,
                                                      StageReport& report) const {
    report.stage = "tag_balance";
    report.records_in = records.size();

    std::map<std::string, std::vector<std::size_t>> by_tag;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (const std::string& tag : records[i].tags) {
            by_tag[tag].push_back(i);
        }
    }

    // Subsampling removes a record from a tag by stripping that tag; the
    // record itself dies only when stripped of every tag it carried.
    std::vector<std::set<std::string>> stripped(records.size());
    for (auto& [tag, members] : by_tag) {
        if (members.size() <= config_.tag_cap) {
            continue;
        }
        // Stratify by difficulty so the subsample keeps the tag's difficulty
        // profile; quotas by largest remainder.
        std::map<int, std::vector<std::size_t>> strata;
        for (std::size_t idx : members) {
            strata[records[idx].difficulty.value_or(DifficultyBand{0, 0}).hi].push_back(idx);
        }
        const double scale =
            static_cast<double>(config_.tag_cap) / static_cast<double>(members.size());
        std::vector<std::pair<double, int>> remainders; // (fraction, stratum key)
        std::map<int, std::size_t> quota;
        std::size_t assigned = 0;
        for (const auto& [difficulty, stratum] : strata) {
            const double exact = scale * static_cast<double>(stratum.size());
            quota[difficulty] = static_cast<std::size_t>(std::floor(exact));
            assigned += quota[difficulty];
            remainders.emplace_back(exact - std::floor(exact), difficulty);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; assigned < config_.tag_cap && i < remainders.size(); ++i) {
            ++quota[remainders[i].second];
            ++assigned;
        }

        std::mt19937_64 rng(config_.rng_seed ^ fnv64(tag));
        std::set<std::size_t> kept;
        for (auto& [difficulty, stratum] : strata) {
            std::vector<std::size_t> shuffled = stratum;
            std::sort(shuffled.begin(), shuffled.end(), [&](std::size_t a, std::size_t b) {
                return records[a].id < records[b].id;
            });
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            const std::size_t take = std::min(quota[difficulty], shuffled.size());
            for (std::size_t i = 0; i < take; ++i) {
                kept.insert(shuffled[i]);
            }
        }
        for (std::size_t idx : members) {
            if (kept.count(idx) == 0) {
                stripped[idx].insert(tag);
            }
        }
    }

    std::vector<ProblemRecord> survivors;
    survivors.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].tags.empty() && stripped[i].size() == records[i].tags.size()) {
            ++report.dropped_by_reason["tag_cap_subsample"];
            continue;
        }
        for (const std::string& tag : stripped[i]) {
            records[i].tags.erase(tag);
        }
        survivors.push_back(std::move(records[i]));
    }
    report.records_out = survivors.size();
    count_platforms(survivors, report.per_platform_out);
    return survivors;
}

std::vector<ProblemRecord> DataPipeline::dedup(std::vector<ProblemRecord> records,
                                               StageReport& report) const {
    report.stage = "dedup";
    report.records_in = records.size();

    std::vector<Embedding> embeddings(records.size());
    try {
        for (std::size_t i = 0; i < records.size(); ++i) {
            embeddings[i] = embedder_.embed(records[i].statement);
        }
    } catch (const std::exception& e) {
        // No partial dedup: an embedder fault aborts the stage.
        throw PipelineError(std::string("embedder failed, dedup aborted: ") + e.what());
    }

    std::map<std::string, std::vector<std::size_t>> by_tag;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (const std::string& tag : records[i].tags) {
            by_tag[tag].push_back(i);
        }
    }

    UnionFind components(records.size());
    for (const auto& [tag, members] : by_tag) {
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const double sim = cosine_similarity(embeddings[members[a]],
                                                     embeddings[members[b]]);
                if (sim > config_.duplicate_threshold) {
                    components.unite(members[a], members[b]);
                }
            }
        }
    }

    // One survivor per component: most submissions, then largest test set,
    // then smallest id.
    std::map<std::size_t, std::size_t> champion;
    auto better = [&](std::size_t a, std::size_t b) {
        const auto& ra = records[a];
        const auto& rb = records[b];
        if (ra.submissions.size() != rb.submissions.size()) {
            return ra.submissions.size() > rb.submissions.size();
        }
        if (ra.test_count() != rb.test_count()) {
            return ra.test_count() > rb.test_count();
        }
        return ra.id < rb.id;
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::size_t root = components.find(i);
        auto it = champion.find(root);
        if (it == champion.end() || better(i, it->second)) {
            champion[root] = i;
        }
    }

    std::vector<ProblemRecord> survivors;
    survivors.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (champion.at(components.find(i)) == i) {
            survivors.push_back(std::move(records[i]));
        } else {
            ++report.dropped_by_reason["duplicate"];
        }
    }
    report.records_out = survivors.size();
    count_platforms(survivors, report.per_platform_out);
    return survivors;
}

int DataPipeline::percentile_floor(std::vector<int> values, double percentile) {
    if (values.empty()) {
        throw std::invalid_argument("percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    // Nearest-rank: the smallest value with at least `percentile` of the mass
    // at or below it.
    const std::size_t rank = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::ceil(percentile * static_cast<double>(values.size()))));
    return values[rank - 1];
}

std::vector<ProblemRecord> DataPipeline::prune_difficulty(std::vector<ProblemRecord> records,
                                                          StageReport& report) const {
    report.stage = "difficulty_prune";
    report.records_in = records.size();

    std::map<std::string, std::vector<int>> values_by_tag;
    for (const ProblemRecord& record : records) {
        const int value = record.difficulty.value_or(DifficultyBand{0, 0}).hi;
        for (const std::string& tag : record.tags) {
            values_by_tag[tag].push_back(value);
        }
    }
    std::map<std::string, int> floors;
    for (const auto& [tag, values] : values_by_tag) {
        auto it = config_.floor_overrides.find(tag);
        floors[tag] = it != config_.floor_overrides.end() ? it->second
                                                          : percentile_floor(values);
    }

    std::vector<ProblemRecord> survivors;
    survivors.reserve(records.size());
    for (ProblemRecord& record : records) {
        const int value = record.difficulty.value_or(DifficultyBand{0, 0}).hi;
        bool clears_some_floor = false;
        for (const std::string& tag : record.tags) {
            if (value >= floors.at(tag)) {
                clears_some_floor = true;
                break;
            }
        }
        if (!clears_some_floor) {
            ++report.dropped_by_reason["below_all_floors"];
            continue;
        }
        survivors.push_back(std::move(record));
    }
    report.records_out = survivors.size();
    count_platforms(survivors, report.per_platform_out);
    return survivors;
}

DataPipeline::Result DataPipeline::run(std::vector<ProblemRecord> records, int last_stage) const {
    if (last_stage < 1 || last_stage > 4) {
        throw std::invalid_argument("last_stage must lie in 1..4");
    }
    Result result;
    result.report.raw_count = records.size();
    count_platforms(records, result.report.per_platform_raw);

    using StageFn =
        std::vector<ProblemRecord> (DataPipeline::*)(std::vector<ProblemRecord>, StageReport&)
            const;
    const StageFn stages[] = {&DataPipeline::filter_completeness, &DataPipeline::balance_tags,
                              &DataPipeline::dedup, &DataPipeline::prune_difficulty};

    for (int stage = 1; stage <= last_stage; ++stage) {
        StageReport stage_report;
        records = (this->*stages[stage - 1])(std::move(records), stage_report);
        result.report.stages.push_back(std::move(stage_report));
    }
    for (const ProblemRecord& record : records) {
        for (const std::string& tag : record.tags) {
            ++result.report.per_tag_final[tag];
        }
    }
    result.survivors = std::move(records);
    return result;
}

} // namespace solvita
