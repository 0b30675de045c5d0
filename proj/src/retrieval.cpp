#include "imret/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "imret/feature_pipeline.hpp"

namespace imret {

RankedList rank_l2(const std::string& query_id, std::span<const double> query,
                   const FeatureSet& refs, const IdSet* exclude) {
    if (refs.empty()) throw DataError("rank_l2: empty reference set");
    if (query.size() != refs.dim())
        throw DataError("rank_l2: query dim " + std::to_string(query.size()) +
                        " != reference dim " + std::to_string(refs.dim()));

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (exclude && exclude->count(refs.id(i))) continue;
        auto r = refs.row(i);
        double s = 0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            double d = query[j] - r[j];
            s += d * d;
        }
        scored.emplace_back(std::sqrt(s), i);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return refs.id(a.second) < refs.id(b.second);
    });

    RankedList list;
    list.query_id = query_id;
    list.entries.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i)
        list.entries.push_back(
            {refs.id(scored[i].second), scored[i].first, static_cast<int>(i) + 1});
    return list;
}

FeatureVector expand_query_avg(std::span<const double> query, const FeatureSet& refs,
                               const RankedList& initial, std::size_t R) {
    if (R > initial.entries.size())
        throw DataError("expand_query_avg: R=" + std::to_string(R) +
                        " exceeds list length " + std::to_string(initial.entries.size()));
    if (R == 0) return l2_normalize(query);
    if (query.size() != refs.dim())
        throw DataError("expand_query_avg: query dim != reference dim");

    FeatureVector mean(query.begin(), query.end());
    for (std::size_t i = 0; i < R; ++i) {
        auto v = refs.get(initial.entries[i].item_id);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += v[j];
    }
    const double scale = 1.0 / static_cast<double>(R + 1);
    for (double& x : mean) x *= scale;
    // Antipodal top results can cancel the query exactly; report it.
    double norm = 0;
    for (double x : mean) norm += x * x;
    if (norm == 0.0)
        throw DataError("expand_query_avg: expanded query cancelled to the zero vector");
    return l2_normalize(mean);
}

RankedList rank_with_qe(const std::string& query_id, std::span<const double> query,
                        const FeatureSet& refs, std::size_t R, const IdSet* exclude) {
    RankedList first = rank_l2(query_id, query, refs, exclude);
    if (R == 0) return first;
    std::size_t r = std::min(R, first.entries.size());
    FeatureVector expanded = expand_query_avg(query, refs, first, r);
    return rank_l2(query_id, expanded, refs, exclude);
}

} // namespace imret
