#include "imret/spatial_search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

#include "imret/parallel.hpp"

namespace imret {

PatchPlan patch_plan(int levels) {
    if (levels < 1) throw DataError("patch_plan: levels must be >= 1");
    PatchPlan plan;
    plan.levels = levels;
    plan.patches.reserve(patch_count(levels));
    for (int l = 1; l <= levels; ++l) {
        const double side = 2.0 / (l + 1);
        const double stride = 1.0 / (l + 1);
        for (int r = 0; r < l; ++r)
            for (int c = 0; c < l; ++c)
                plan.patches.push_back(
                    {l, r, c, false, {c * stride, r * stride, side, side}});
        if (l % 2 == 0) {
            const double corner = 0.5 - side / 2;
            plan.patches.push_back({l, -1, -1, true, {corner, corner, side, side}});
        }
    }
    return plan;
}

std::size_t patch_count(int levels) {
    if (levels < 1) throw DataError("patch_count: levels must be >= 1");
    std::size_t total = 0;
    for (int l = 1; l <= levels; ++l)
        total += static_cast<std::size_t>(l) * l + (l % 2 == 0 ? 1 : 0);
    return total;
}

void write_patch_plan_tsv(const PatchPlan& plan, std::ostream& out) {
    char buf[160];
    for (const auto& p : plan.patches) {
        if (p.center)
            std::snprintf(buf, sizeof(buf), "%d\tC\tC\t%.9g\t%.9g\t%.9g\t%.9g", p.level,
                          p.rect.x, p.rect.y, p.rect.w, p.rect.h);
        else
            std::snprintf(buf, sizeof(buf), "%d\t%d\t%d\t%.9g\t%.9g\t%.9g\t%.9g", p.level,
                          p.row, p.col, p.rect.x, p.rect.y, p.rect.w, p.rect.h);
        out << buf << '\n';
    }
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

double spatial_distance(const PatchFeatureSet& query, const PatchFeatureSet& reference) {
    if (query.count() == 0 || reference.count() == 0)
        throw DataError("spatial_distance: empty patch set");
    if (query.dim != reference.dim)
        throw DataError("spatial_distance: dim mismatch (" + std::to_string(query.dim) +
                        " vs " + std::to_string(reference.dim) + ")");
    double total = 0;
    for (std::size_t qi = 0; qi < query.count(); ++qi) {
        auto qp = query.patch(qi);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t ri = 0; ri < reference.count(); ++ri)
            best = std::min(best, squared_distance(qp, reference.patch(ri)));
        total += std::sqrt(best);
    }
    return total / static_cast<double>(query.count());
}

RankedList spatial_rank(const PatchFeatureSet& query,
                        std::span<const PatchFeatureSet> references, int workers) {
    if (references.empty()) throw DataError("spatial_rank: empty reference collection");

    std::vector<double> distances(references.size());
    parallel_for(references.size(), workers, [&](std::size_t i) {
        distances[i] = spatial_distance(query, references[i]);
    });

    std::vector<std::size_t> order(references.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (distances[a] != distances[b]) return distances[a] < distances[b];
        return references[a].image_id < references[b].image_id;
    });

    RankedList list;
    list.query_id = query.image_id;
    list.entries.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        list.entries.push_back({references[order[i]].image_id, distances[order[i]],
                                static_cast<int>(i) + 1});
    return list;
}

std::vector<PatchFeatureSet> group_patch_features(const FeatureSet& records) {
    struct Group {
        std::size_t first_seen;
        std::map<std::size_t, std::size_t> patches; // patch index -> record row
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Group> groups;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string& id = records.id(i);
        auto hash = id.rfind('#');
        if (hash == std::string::npos || hash == 0 || hash + 1 == id.size())
            throw DataError("patch record '" + id + "' is not of the form <image-id>#<index>");
        std::string image_id = id.substr(0, hash);
        std::string index_str = id.substr(hash + 1);
        char* end = nullptr;
        unsigned long idx = std::strtoul(index_str.c_str(), &end, 10);
        if (end != index_str.c_str() + index_str.size())
            throw DataError("patch record '" + id + "': bad patch index '" + index_str + "'");

        auto [it, inserted] = groups.try_emplace(image_id, Group{order.size(), {}});
        if (inserted) order.push_back(image_id);
        if (!it->second.patches.emplace(idx, i).second)
            throw DataError("image '" + image_id + "': duplicate patch index " +
                            std::to_string(idx));
    }

    std::vector<PatchFeatureSet> result;
    result.reserve(order.size());
    for (const auto& image_id : order) {
        const Group& g = groups.at(image_id);
        PatchFeatureSet set;
        set.image_id = image_id;
        set.dim = records.dim();
        set.data.reserve(g.patches.size() * set.dim);
        std::size_t expected = 0;
        for (const auto& [idx, row] : g.patches) {
            if (idx != expected)
                throw DataError("image '" + image_id + "': patch indices not contiguous (" +
                                "missing index " + std::to_string(expected) + ")");
            ++expected;
            auto r = records.row(row);
            set.data.insert(set.data.end(), r.begin(), r.end());
        }
        result.push_back(std::move(set));
    }
    return result;
}

} // namespace imret
