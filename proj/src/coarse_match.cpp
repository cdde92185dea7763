#include "cfreg/coarse_match.hpp"

#include <algorithm>
#include <stdexcept>

namespace cfreg {

CoarseCorrespondences propose(const ConfidenceMatrix& conf, double tau_c, std::size_t tau_m) {
    if (!(tau_c > 0.0 && tau_c < 1.0))
        throw std::invalid_argument("propose: tau_c must lie in (0, 1)");

    const Eigen::Index n = conf.interior_rows();
    const Eigen::Index m = conf.interior_cols();

    // Interior entries with positive confidence, ordered once by
    // (confidence desc, (i, j) lexicographic). Thresholding then becomes a
    // prefix of this ordering, which makes the halving schedule monotone.
    std::vector<CoarsePair> positive;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            if (conf.values(i, j) > 0.0)
                positive.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                    conf.values(i, j)});
    std::sort(positive.begin(), positive.end(), [](const CoarsePair& a, const CoarsePair& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    std::size_t selected = 0;
    while (selected < positive.size() && positive[selected].confidence > tau_c) ++selected;

    // Fallback: lower the effective threshold just enough to reach tau_m
    // correspondences (the continuum limit of gradually decreasing tau_c).
    if (selected < tau_m) selected = std::min(std::max(selected, tau_m), positive.size());

    CoarseCorrespondences out;
    out.pairs.assign(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(selected));
    return out;
}

}  // namespace cfreg
