#pragma once

#include <cstddef>
#include <vector>

#include "cfreg/sinkhorn.hpp"

namespace cfreg {

struct CoarsePair {
    std::size_t i;      // node index in X
    std::size_t j;      // node index in Y
    double confidence;  // in (0, 1]
};

/// Node correspondences sorted by confidence descending, ties broken by
/// (i, j) lexicographic order. Never references a slack index.
struct CoarseCorrespondences {
    std::vector<CoarsePair> pairs;
};

/// Proposes all interior entries with confidence > tau_c. When fewer than
/// tau_m come out, the effective threshold drops just far enough that the
/// highest-confidence remaining entries top the set up to tau_m (or until
/// no positive-confidence entries remain).
CoarseCorrespondences propose(const ConfidenceMatrix& conf, double tau_c, std::size_t tau_m);

}  // namespace cfreg
