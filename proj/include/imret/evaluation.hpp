#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "imret/error.hpp"
#include "imret/ranked_list.hpp"

namespace imret {

struct QueryJudgment {
    std::unordered_set<std::string> positive; // non-empty
    std::unordered_set<std::string> junk;     // neither right nor wrong
};

struct GroundTruth {
    /// When set, the query's own id is removed from its ranked list and
    /// judgment sets before scoring (Holidays-style protocol).
    bool exclude_self = false;
    std::vector<std::string> query_order;
    std::unordered_map<std::string, QueryJudgment> queries;
};

enum class ApMode {
    standard,  // mean of precision at each positive hit
    trapezoid, // trapezoidal precision-recall integration (original Oxford script)
};

/// Average precision of one ranked list. Junk ids are dropped and ranks
/// recomputed before scoring; positives missing from the list contribute
/// zero precision. Throws DataError on an empty positive set.
double average_precision(const RankedList& ranked,
                         const std::unordered_set<std::string>& positive,
                         const std::unordered_set<std::string>& junk,
                         ApMode mode = ApMode::standard);

struct EvalReport {
    std::vector<std::pair<std::string, double>> per_query; // (query id, AP)
    double map = 0;
    std::size_t query_count = 0;
};

/// Scores every run against its judgment; mAP is the arithmetic mean of
/// the per-query APs. A run whose query id has no judgment is an error.
EvalReport mean_average_precision(std::span<const RankedList> runs, const GroundTruth& gt,
                                  ApMode mode = ApMode::standard);

/// Ground-truth JSON:
/// {"exclude_self": bool,
///  "queries": [{"id": str, "positive": [str], "junk": [str]}]}
GroundTruth parse_groundtruth(const std::filesystem::path& path);
void save_groundtruth(const GroundTruth& gt, const std::filesystem::path& path);

/// Concept-membership rows (concept-id, item-id) from a two-column TSV.
std::vector<std::pair<std::string, std::string>>
read_concept_membership(std::istream& in, const std::string& source_name = "<stream>");

/// Same-concept ground truth: for each query, positives are all
/// collection items (manifest rows not listed as queries) sharing the
/// query's concept; exclude_self is set. Queries must appear in the
/// manifest and their concept must have at least one collection item.
GroundTruth build_same_concept_gt(
    const std::vector<std::pair<std::string, std::string>>& membership,
    const std::vector<std::string>& queries);

/// TSV report: one "query-id<TAB>AP" line per query then a final
/// "mAP<TAB>value" line, 6 decimal places.
void write_eval_report_tsv(const EvalReport& report, std::ostream& out);

} // namespace imret
