#pragma once

#include <vector>

#include "cfreg/fine_match.hpp"
#include "cfreg/grouping.hpp"
#include "cfreg/neighbor_index.hpp"
#include "cfreg/sinkhorn.hpp"
#include "cfreg/types.hpp"

namespace cfreg {

/// (n'+1) x (m'+1) coarse supervision weights: interior = min of the two
/// directed patch overlap ratios, slack column/row = 1 - node visibility,
/// corner = 0. All entries lie in [0, 1].
struct WeightMatrix {
    Eigen::MatrixXd values;
};

/// (k+1) x (k+1) fine supervision matrix in {0, 1}: interior is the
/// tau_p-threshold test under the ground-truth pose, slack entries are
/// max(0, 1 - interior row/column sum), rows/columns of repeated slots are
/// zeroed, corner is 0.
struct FineBinaryMatrix {
    Eigen::MatrixXd values;
};

struct LossValue {
    double value = 0.0;
    bool degenerate = false;  // zero total weight: value defined as 0
};

/// Fraction of `group` points with some point of `other` strictly within
/// tau_p after mapping through `gt`. Throws on an empty group.
double overlap_ratio(const std::vector<Eigen::Vector3d>& group, const NeighborIndex& other,
                     const RigidTransform& gt, double tau_p);

double pairwise_overlap_ratio(const std::vector<Eigen::Vector3d>& group_i,
                              const std::vector<Eigen::Vector3d>& group_j,
                              const RigidTransform& gt, double tau_p);

/// Builds the coarse weight matrix from per-node point groups. `gt` maps
/// X coordinates into Y's frame. Every group must be nonempty.
WeightMatrix build_weight_matrix(const std::vector<std::vector<Eigen::Vector3d>>& groups_x,
                                 const std::vector<std::vector<Eigen::Vector3d>>& groups_y,
                                 const PointCloud& cloud_x, const PointCloud& cloud_y,
                                 const RigidTransform& gt, double tau_p);

/// -sum(W .* log S) / sum(W) with the 0*log(0) = 0 convention; logs are
/// clamped at log(1e-12). Zero total weight returns 0 with the degenerate
/// flag set.
LossValue coarse_loss(const ConfidenceMatrix& conf, const WeightMatrix& w);

FineBinaryMatrix fine_binary(const PatchPair& p, const RigidTransform& gt, double tau_p);

/// -sum over patches of B .* log S over the total mass of B, same
/// conventions as coarse_loss.
LossValue fine_loss(const std::vector<ConfidenceMatrix>& conf,
                    const std::vector<FineBinaryMatrix>& binaries);

double total_loss(const LossValue& lc, const LossValue& lf, double lambda);

/// Upstream matrix u such that sinkhorn_grad(scores, iters, variant, u)
/// yields d(loss)/d(scores); entries whose log was clamped contribute 0.
Eigen::MatrixXd coarse_loss_upstream(const ConfidenceMatrix& conf, const WeightMatrix& w);
Eigen::MatrixXd fine_loss_upstream(const ConfidenceMatrix& conf, const FineBinaryMatrix& b,
                                   double total_binary_mass);

}  // namespace cfreg
