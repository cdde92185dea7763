#pragma once

#include <Eigen/Core>
#include <string>

#include "cfreg/neighbor_index.hpp"
#include "cfreg/types.hpp"

namespace cfreg {

/// Per-point feature vectors, row-aligned with a PointCloud. Every row is
/// L2-normalized to 1, or all-zero for degenerate neighborhoods.
struct FeatureSet {
    Eigen::MatrixXd vectors;  // rows = points, cols = descriptor dimension

    std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
    Eigen::RowVectorXd row(std::size_t i) const { return vectors.row(static_cast<Eigen::Index>(i)); }
    bool is_zero_row(std::size_t i) const {
        return vectors.row(static_cast<Eigen::Index>(i)).isZero(0.0);
    }
};

inline constexpr int kDescriptorDim = 13;

/// Rotation-invariant descriptor per target point, computed from its
/// `radius`-neighborhood in `support`:
///   [0..3]  eigenvalue shape features of the local covariance
///           (linearity, planarity, sphericity, omnivariance)
///   [4..11] 8-bin histogram of angles between neighbor offsets and the
///           direction towards the neighborhood centroid
///   [12]    local density: neighbor count / max neighbor count
/// The result is L2-normalized. Neighborhoods with fewer than 3 points give
/// an all-zero row (degenerate, not an error).
FeatureSet compute_descriptors(const PointCloud& targets, const PointCloud& support,
                               const NeighborIndex& support_index, double radius);

/// Same-cloud convenience: neighborhoods come from the described cloud itself.
FeatureSet compute_descriptors(const PointCloud& cloud, const NeighborIndex& index, double radius);

/// Loads a CSV feature file (one vector per row) and re-normalizes each row
/// to unit L2. Throws when the row count differs from `expected_rows` or any
/// entry is non-finite.
FeatureSet load_features(const std::string& path, std::size_t expected_rows);

}  // namespace cfreg
