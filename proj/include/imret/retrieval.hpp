#pragma once

#include <span>
#include <string>
#include <unordered_set>

#include "imret/feature_store.hpp"
#include "imret/ranked_list.hpp"

namespace imret {

using IdSet = std::unordered_set<std::string>;

/// All non-excluded references sorted by ascending Euclidean distance to
/// the query; ties broken by item id.
RankedList rank_l2(const std::string& query_id, std::span<const double> query,
                   const FeatureSet& refs, const IdSet* exclude = nullptr);

/// Average query expansion: unit-normalized mean of the original query
/// and the vectors of the top R entries of `initial` (looked up in
/// `refs`). R=0 returns l2_normalize(query). Throws DataError when
/// R exceeds the list length or the mean cancels to zero.
FeatureVector expand_query_avg(std::span<const double> query, const FeatureSet& refs,
                               const RankedList& initial, std::size_t R);

/// Two-pass retrieval: rank_l2, expand the query from the top R results,
/// rank again. R larger than the first-pass list is clamped.
RankedList rank_with_qe(const std::string& query_id, std::span<const double> query,
                        const FeatureSet& refs, std::size_t R,
                        const IdSet* exclude = nullptr);

} // namespace imret
