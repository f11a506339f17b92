#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace solvita {

// One SEARCH/REPLACE edit. The search text must occur exactly once in the
// target at apply time; source_span records the matched byte range.
struct EditBlock {
    std::string search;
    std::string replace;
    std::size_t span_begin = 0;
    std::size_t span_end = 0;

    bool operator==(const EditBlock& other) const {
        return search == other.search && replace == other.replace;
    }
};

class PatchParseError : public std::runtime_error {
public:
    PatchParseError(std::string message, std::size_t line)
        : std::runtime_error(std::move(message)), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class PatchApplyError : public std::runtime_error {
public:
    enum class Kind { no_match, ambiguous };

    PatchApplyError(Kind kind, std::size_t block_index, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind), block_index_(block_index) {}
    Kind kind() const { return kind_; }
    std::size_t block_index() const { return block_index_; }

private:
    Kind kind_;
    std::size_t block_index_;
};

/// Extracts every well-formed SEARCH/REPLACE block in document order. The
/// marker lines are "<<<<<<< SEARCH", "=======", ">>>>>>> REPLACE" at column
/// 0; block bodies are preserved byte-exact. Text outside blocks is ignored.
/// Throws PatchParseError on malformed blocks and on patches with no blocks.
std::vector<EditBlock> parse_patch(std::string_view text);

/// Re-renders blocks into marker syntax (parse_patch round-trips it).
std::string render_patch(const std::vector<EditBlock>& blocks);

/// Applies blocks sequentially; each search must match the current
/// intermediate text exactly once. All-or-nothing: any failure throws and the
/// caller's source is unchanged. Returns the patched text and fills each
/// block's source span.
std::string apply_patch(std::string_view source, std::vector<EditBlock>& blocks);

// Patch acceptance report: a patch is accepted only when every test that
// passed before still passes after.
struct RegressionReport {
    bool accepted = false;
    std::vector<std::string> fixed;
    std::vector<std::string> regressed;
    std::vector<std::string> still_failing;
};

/// Compares two pass/fail maps over the identical test-id set. Throws
/// std::invalid_argument when the id sets differ.
RegressionReport regression_gate(const std::map<std::string, bool>& before,
                                 const std::map<std::string, bool>& after);

} // namespace solvita
