#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "imret/feature_store.hpp"
#include "imret/ranked_list.hpp"

namespace imret {

/// One crop rectangle in normalized image coordinates (fractions of each
/// image dimension independently).
struct PatchRect {
    double x = 0, y = 0, w = 0, h = 0;
};

/// Patch of the multi-scale grid. At level l the grid is l x l with
/// square-fraction side 2/(l+1) and stride 1/(l+1); even levels add one
/// extra patch centered at (0.5, 0.5), flagged with center=true.
struct PatchSpec {
    int level = 0;
    int row = -1; // -1 for the center patch
    int col = -1;
    bool center = false;
    PatchRect rect;
};

/// All patches for levels 1..levels, level-major, row-major within a
/// level, center patch last.
struct PatchPlan {
    int levels = 0;
    std::vector<PatchSpec> patches;
};

PatchPlan patch_plan(int levels);

/// Closed form: sum over l of l^2, plus one for each even level.
std::size_t patch_count(int levels);

/// TSV contract for external crop-and-extract tooling:
/// level, row, col ("C C" for the center patch), x, y, w, h at 9
/// significant digits. Patch index = 0-based line number.
void write_patch_plan_tsv(const PatchPlan& plan, std::ostream& out);

/// Per-patch descriptors of one image, in plan order.
struct PatchFeatureSet {
    std::string image_id;
    std::size_t dim = 0;
    std::vector<double> data; // count * dim, row-major

    std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const double> patch(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
};

/// Mean over query patches of the minimum Euclidean distance to any
/// reference patch. Not symmetric: the query supplies the outer average.
double spatial_distance(const PatchFeatureSet& query, const PatchFeatureSet& reference);

/// References sorted by ascending spatial_distance to the query; ties
/// broken by item id. Parallelizes distance computation over references.
RankedList spatial_rank(const PatchFeatureSet& query,
                        std::span<const PatchFeatureSet> references, int workers = 1);

/// Groups records with ids "<image-id>#<patch-index>" into per-image
/// patch sets. Patch indices must be 0-based and contiguous per image;
/// image order follows first appearance in the set.
std::vector<PatchFeatureSet> group_patch_features(const FeatureSet& records);

} // namespace imret
