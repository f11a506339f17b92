#include "solvita/patch_engine.hpp"

namespace solvita {

namespace {

constexpr std::string_view kSearchMarker = "<<<<<<< SEARCH";
constexpr std::string_view kSeparator = "=======";
constexpr std::string_view kReplaceMarker = ">>>>>>> REPLACE";

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t first,
                       std::size_t last) {
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (i != first) {
            out.push_back('\n');
        }
        out.append(lines[i]);
    }
    return out;
}

} // namespace

std::vector<EditBlock> parse_patch(std::string_view text) {
    const auto lines = split_lines(text);
    std::vector<EditBlock> blocks;

    std::size_t i = 0;
    while (i < lines.size()) {
        if (lines[i] != kSearchMarker) {
            ++i;
            continue;
        }
        const std::size_t block_line = i + 1; // 1-based for diagnostics
        std::size_t search_begin = i + 1;
        std::size_t j = search_begin;
        while (j < lines.size() && lines[j] != kSeparator) {
            if (lines[j] == kSearchMarker || lines[j] == kReplaceMarker) {
                throw PatchParseError("edit block starting at line " + std::to_string(block_line) +
                                          " is missing its '=======' separator",
                                      j + 1);
            }
            ++j;
        }
        if (j >= lines.size()) {
            throw PatchParseError("unterminated edit block starting at line " +
                                      std::to_string(block_line),
                                  block_line);
        }
        const std::size_t search_end = j;
        std::size_t replace_begin = j + 1;
        std::size_t k = replace_begin;
        while (k < lines.size() && lines[k] != kReplaceMarker) {
            if (lines[k] == kSearchMarker || lines[k] == kSeparator) {
                throw PatchParseError("edit block starting at line " + std::to_string(block_line) +
                                          " is missing its '>>>>>>> REPLACE' terminator",
                                      k + 1);
            }
            ++k;
        }
        if (k >= lines.size()) {
            throw PatchParseError("unterminated edit block starting at line " +
                                      std::to_string(block_line),
                                  block_line);
        }
        EditBlock block;
        block.search = join_lines(lines, search_begin, search_end);
        block.replace = join_lines(lines, replace_begin, k);
        if (block.search.empty()) {
            throw PatchParseError("edit block starting at line " + std::to_string(block_line) +
                                      " has an empty search body",
                                  block_line);
        }
        blocks.push_back(std::move(block));
        i = k + 1;
    }

    if (blocks.empty()) {
        throw PatchParseError("patch contains no edit blocks", 1);
    }
    return blocks;
}

std::string render_patch(const std::vector<EditBlock>& blocks) {
    std::string out;
    for (const EditBlock& block : blocks) {
        out.append(kSearchMarker);
        out.push_back('\n');
        out.append(block.search);
        out.push_back('\n');
        out.append(kSeparator);
        out.push_back('\n');
        if (!block.replace.empty()) {
            out.append(block.replace);
            out.push_back('\n');
        }
        out.append(kReplaceMarker);
        out.push_back('\n');
    }
    return out;
}

std::string apply_patch(std::string_view source, std::vector<EditBlock>& blocks) {
    std::string current(source);
    for (std::size_t index = 0; index < blocks.size(); ++index) {
        EditBlock& block = blocks[index];
        const std::size_t first = current.find(block.search);
        if (first == std::string::npos) {
            throw PatchApplyError(PatchApplyError::Kind::no_match, index,
                                  "edit block " + std::to_string(index) +
                                      ": search text not found in target");
        }
        const std::size_t second = current.find(block.search, first + 1);
        if (second != std::string::npos) {
            throw PatchApplyError(PatchApplyError::Kind::ambiguous, index,
                                  "edit block " + std::to_string(index) +
                                      ": search text occurs more than once");
        }
        block.span_begin = first;
        block.span_end = first + block.search.size();
        current.replace(first, block.search.size(), block.replace);
    }
    return current;
}

RegressionReport regression_gate(const std::map<std::string, bool>& before,
                                 const std::map<std::string, bool>& after) {
    if (before.size() != after.size()) {
        throw std::invalid_argument("regression gate: test id sets differ in size");
    }
    RegressionReport report;
    report.accepted = true;
    for (const auto& [id, passed_before] : before) {
        auto it = after.find(id);
        if (it == after.end()) {
            throw std::invalid_argument("regression gate: test id missing from after set: " + id);
        }
        const bool passed_after = it->second;
        if (passed_before && !passed_after) {
            report.accepted = false;
            report.regressed.push_back(id);
        } else if (!passed_before && passed_after) {
            report.fixed.push_back(id);
        } else if (!passed_before && !passed_after) {
            report.still_failing.push_back(id);
        }
    }
    return report;
}

} // namespace solvita
