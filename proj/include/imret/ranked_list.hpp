#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace imret {

struct RankedEntry {
    std::string item_id;
    double score = 0; // distance (ascending lists) or decision value (descending)
    int rank = 0;     // 1-based
};

/// Ordered result of one query: ranks contiguous from 1, item ids unique.
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
};

/// One line per entry: query-id, rank, item-id, score (9 significant
/// digits). Lists are concatenated in the order given.
void write_ranked_lists_tsv(std::span<const RankedList> lists, std::ostream& out);

/// Inverse of write_ranked_lists_tsv; consecutive lines with the same
/// first column form one list. Ranks must be contiguous from 1.
std::vector<RankedList> read_ranked_lists_tsv(std::istream& in,
                                              const std::string& source_name = "<stream>");

} // namespace imret
