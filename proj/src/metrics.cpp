#include "cfreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cfreg/neighbor_index.hpp"

namespace cfreg {

InlierRatioResult inlier_ratio(const PointCorrespondences& c, const PointCloud& cloud_x,
                               const PointCloud& cloud_y, const RigidTransform& gt, double tau1) {
    if (c.empty()) return {0.0, true};
    const double tau2 = tau1 * tau1;
    std::size_t inliers = 0;
    for (const auto& pair : c.pairs)
        if ((gt.apply(cloud_x.points[pair.i]) - cloud_y.points[pair.j]).squaredNorm() < tau2)
            ++inliers;
    return {static_cast<double>(inliers) / static_cast<double>(c.size()), false};
}

double feature_matching_recall(const std::vector<double>& per_pair_ir, double tau2) {
    if (per_pair_ir.empty()) return 0.0;
    std::size_t hits = 0;
    for (double ir : per_pair_ir)
        if (ir > tau2) ++hits;
    return static_cast<double>(hits) / static_cast<double>(per_pair_ir.size());
}

std::vector<std::pair<std::size_t, std::size_t>> gt_correspondences(const PointCloud& cloud_x,
                                                                    const PointCloud& cloud_y,
                                                                    const RigidTransform& gt,
                                                                    double tau1) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (cloud_x.empty() || cloud_y.empty()) return out;
    const PointCloud x_in_y = apply_transform(gt, cloud_x);
    const NeighborIndex idx_y(cloud_y, std::max(tau1, 1e-6));
    const NeighborIndex idx_x(x_in_y, std::max(tau1, 1e-6));
    const double tau2 = tau1 * tau1;
    for (std::size_t i = 0; i < x_in_y.size(); ++i) {
        const auto j = idx_y.nearest(x_in_y.points[i]);
        if (!j) continue;
        if ((x_in_y.points[i] - cloud_y.points[*j]).squaredNorm() >= tau2) continue;
        const auto back = idx_x.nearest(cloud_y.points[*j]);
        if (back && *back == i) out.emplace_back(i, *j);
    }
    return out;
}

double rmse(const std::vector<std::pair<std::size_t, std::size_t>>& gt_pairs,
            const PointCloud& cloud_x, const PointCloud& cloud_y,
            const RigidTransform& estimated) {
    if (gt_pairs.empty()) throw std::invalid_argument("rmse: empty ground-truth set");
    double acc = 0.0;
    for (const auto& [i, j] : gt_pairs)
        acc += (estimated.apply(cloud_x.points[i]) - cloud_y.points[j]).squaredNorm();
    return std::sqrt(acc / static_cast<double>(gt_pairs.size()));
}

std::pair<std::vector<double>, double> rmse_and_rr(
    const std::vector<RigidTransform>& estimated,
    const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& gt_sets,
    const std::vector<const PointCloud*>& clouds_x, const std::vector<const PointCloud*>& clouds_y,
    double tau3) {
    if (estimated.size() != gt_sets.size() || estimated.size() != clouds_x.size() ||
        estimated.size() != clouds_y.size())
        throw std::invalid_argument("rmse_and_rr: list size mismatch");
    std::vector<double> rmses;
    rmses.reserve(estimated.size());
    std::size_t registered = 0;
    for (std::size_t p = 0; p < estimated.size(); ++p) {
        const double e = rmse(gt_sets[p], *clouds_x[p], *clouds_y[p], estimated[p]);
        rmses.push_back(e);
        if (e < tau3) ++registered;
    }
    const double rr = estimated.empty()
                          ? 0.0
                          : static_cast<double>(registered) / static_cast<double>(estimated.size());
    return {rmses, rr};
}

std::pair<double, double> rte_rre(const RigidTransform& t, const RigidTransform& gt) {
    const double rte = (t.translation - gt.translation).norm();
    double arg = ((t.rotation.transpose() * gt.rotation).trace() - 1.0) / 2.0;
    arg = std::clamp(arg, -1.0, 1.0);
    return {rte, std::acos(arg)};
}

}  // namespace cfreg
