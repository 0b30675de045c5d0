#include "imret/ranked_list.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "imret/error.hpp"

namespace imret {

void write_ranked_lists_tsv(std::span<const RankedList> lists, std::ostream& out) {
    char buf[64];
    for (const auto& list : lists) {
        for (const auto& e : list.entries) {
            std::snprintf(buf, sizeof(buf), "%.9g", e.score);
            out << list.query_id << '\t' << e.rank << '\t' << e.item_id << '\t' << buf
                << '\n';
        }
    }
}

std::vector<RankedList> read_ranked_lists_tsv(std::istream& in,
                                              const std::string& source_name) {
    std::vector<RankedList> lists;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4)
            throw DataError(source_name + ":" + std::to_string(lineno) +
                            ": expected 4 tab-separated fields, got " +
                            std::to_string(fields.size()));
        char* end = nullptr;
        long rank = std::strtol(fields[1].c_str(), &end, 10);
        if (end != fields[1].c_str() + fields[1].size() || rank < 1)
            throw DataError(source_name + ":" + std::to_string(lineno) + ": bad rank '" +
                            fields[1] + "'");
        double score = std::strtod(fields[3].c_str(), &end);
        if (end != fields[3].c_str() + fields[3].size())
            throw DataError(source_name + ":" + std::to_string(lineno) + ": bad score '" +
                            fields[3] + "'");

        if (lists.empty() || lists.back().query_id != fields[0]) {
            lists.push_back({fields[0], {}});
        }
        auto& list = lists.back();
        if (rank != static_cast<long>(list.entries.size()) + 1)
            throw DataError(source_name + ":" + std::to_string(lineno) +
                            ": ranks not contiguous for query '" + fields[0] + "'");
        list.entries.push_back({fields[2], score, static_cast<int>(rank)});
    }
    return lists;
}

} // namespace imret
