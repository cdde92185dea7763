#pragma once

#include <vector>

#include "cfreg/fine_match.hpp"
#include "cfreg/types.hpp"

namespace cfreg {

/// Default thresholds: tau1 = 10 cm (inlier residual), tau2 = 5% (IR cut for
/// FMR), tau3 = 0.2 m (RMSE cut for registration recall).
inline constexpr double kDefaultTau1 = 0.10;
inline constexpr double kDefaultTau2 = 0.05;
inline constexpr double kDefaultTau3 = 0.20;

struct InlierRatioResult {
    double value = 0.0;
    bool degenerate = false;  // empty correspondence set
};

/// Fraction of correspondences with ||gt(x_i) - y_j|| < tau1.
InlierRatioResult inlier_ratio(const PointCorrespondences& c, const PointCloud& cloud_x,
                               const PointCloud& cloud_y, const RigidTransform& gt, double tau1);

/// Fraction of pairs whose inlier ratio exceeds tau2 (strict).
double feature_matching_recall(const std::vector<double>& per_pair_ir, double tau2);

/// Ground-truth correspondences for the RMSE test: mutual nearest neighbors
/// between the clouds under the ground-truth pose, kept when the mutual
/// residual is < tau1.
std::vector<std::pair<std::size_t, std::size_t>> gt_correspondences(const PointCloud& cloud_x,
                                                                    const PointCloud& cloud_y,
                                                                    const RigidTransform& gt,
                                                                    double tau1);

/// RMSE of the ground-truth correspondence set under an estimated pose.
/// Throws when the set is empty.
double rmse(const std::vector<std::pair<std::size_t, std::size_t>>& gt_pairs,
            const PointCloud& cloud_x, const PointCloud& cloud_y,
            const RigidTransform& estimated);

/// Per-pair RMSEs plus the fraction with rmse < tau3 (strict).
std::pair<std::vector<double>, double> rmse_and_rr(
    const std::vector<RigidTransform>& estimated,
    const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& gt_sets,
    const std::vector<const PointCloud*>& clouds_x, const std::vector<const PointCloud*>& clouds_y,
    double tau3);

/// Translation error ||t - t_gt|| and geodesic rotation error
/// arccos((trace(R^T R_gt) - 1) / 2), trace argument clamped to [-1, 1].
std::pair<double, double> rte_rre(const RigidTransform& t, const RigidTransform& gt);

}  // namespace cfreg
