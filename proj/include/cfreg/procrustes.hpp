#pragma once

#include <vector>

#include "cfreg/types.hpp"

namespace cfreg {

/// Weighted least-squares rigid alignment of corresponded points (SVD of the
/// weighted cross-covariance, reflection corrected so det(R) = +1). Needs at
/// least 3 pairs with positive total weight and non-collinear geometry;
/// throws std::runtime_error("procrustes: ...") otherwise.
RigidTransform procrustes(const std::vector<Eigen::Vector3d>& x,
                          const std::vector<Eigen::Vector3d>& y,
                          const std::vector<double>& weights);

/// Unweighted convenience overload.
RigidTransform procrustes(const std::vector<Eigen::Vector3d>& x,
                          const std::vector<Eigen::Vector3d>& y);

}  // namespace cfreg
