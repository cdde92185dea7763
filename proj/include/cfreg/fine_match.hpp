#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfreg/grouping.hpp"
#include "cfreg/sinkhorn.hpp"

namespace cfreg {

struct PointPair {
    std::size_t i;    // point index in X
    std::size_t j;    // point index in Y
    double c_fine;    // fine-stage confidence, in (0, 1]
    double c_coarse;  // confidence of the seeding coarse pair
    double c_global;  // c_fine * c_coarse, exactly
};

struct PointCorrespondences {
    std::vector<PointPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

/// Density-adaptive refinement of one patch pair. Builds k x k inner-product
/// scores with zero slack entries, mutes the rows/columns of repeated slots
/// and the slack corner, runs the fine Sinkhorn variant, then keeps interior
/// entries that are the interior argmax of their row or of their column and
/// exceed tau_f. Both sides fully repeated yields an empty result.
PointCorrespondences refine_patch(const PatchPair& p, int iters, double tau_f);

/// Score-matrix assembly used by refine_patch, exposed for supervision: the
/// fine binary matrix shares the same layout and muting.
ScoreMatrix assemble_fine_scores(const PatchPair& p);

/// Union over per-patch correspondence lists on (i, j); duplicates keep the
/// larger c_global. Sorted by c_global descending, (i, j) lexicographic
/// tie-break.
PointCorrespondences pool(const std::vector<PointCorrespondences>& lists);

/// n draws without replacement with probability proportional to c_global;
/// returns everything when n >= size. Deterministic per seed. Output keeps
/// the pool ordering.
PointCorrespondences sample(const PointCorrespondences& c, std::size_t n, std::uint64_t seed);

/// JSON-lines dump, one object per pair: {src, tgt, c_fine, c_coarse, c_global}.
void write_correspondences_jsonl(const std::string& path, const PointCorrespondences& c);

}  // namespace cfreg
