#pragma once

#include <cstdint>
#include <vector>

#include "cfreg/fine_match.hpp"
#include "cfreg/types.hpp"

namespace cfreg {

struct RegistrationResult {
    RigidTransform transform;
    std::vector<bool> inlier_mask;  // per input correspondence, under `transform`
    std::size_t iterations_used = 0;
    std::size_t inlier_count = 0;
};

struct RansacOptions {
    std::size_t max_iters = 50000;
    double inlier_tau = 0.05;        // meters
    double early_exit_ratio = 0.99;  // stop once the inlier ratio exceeds this
    double confidence = 0.999;       // adaptive iteration bound
    std::uint64_t seed = 0;
};

/// 3-sample RANSAC over point correspondences: best hypothesis by
/// (inlier count, lowest hypothesis index from the seeded stream), refit by
/// Procrustes on its consensus set. Deterministic per seed. Throws with
/// fewer than 3 correspondences.
RegistrationResult ransac(const PointCorrespondences& c, const PointCloud& cloud_x,
                          const PointCloud& cloud_y, const RansacOptions& opts);

}  // namespace cfreg
