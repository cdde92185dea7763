#pragma once

#include <cstdint>
#include <vector>

#include "cfreg/coarse_match.hpp"
#include "cfreg/features.hpp"
#include "cfreg/neighbor_index.hpp"
#include "cfreg/types.hpp"

namespace cfreg {

/// Point-to-node partition: every point has exactly one owning node, the
/// nearest one, with exact ties decided by a seeded RNG.
struct NodeAssignment {
    std::vector<std::size_t> owner;                 // per point: node index
    std::vector<std::vector<std::size_t>> groups;   // per node: member point indices, ascending
};

NodeAssignment assign_points(const PointCloud& points, const PointCloud& nodes,
                             std::uint64_t seed);

/// One side of a truncated patch: exactly k slots.
struct PatchSide {
    std::vector<std::size_t> indices;      // into the side's point cloud
    std::vector<Eigen::Vector3d> coords;
    Eigen::MatrixXd features;              // k x b
    std::vector<bool> repeat_mask;         // true <=> duplicated supplement slot
};

struct PatchPair {
    PatchSide x;
    PatchSide y;
    std::size_t node_i = 0;   // source coarse pair
    std::size_t node_j = 0;
    double c_coarse = 0.0;
};

/// Expands one coarse node pair into a truncated patch pair. Groups larger
/// than k keep the k members nearest to the node; smaller groups are filled
/// by seeded sampling with replacement (marked in repeat_mask); an empty
/// group falls back to all-repeats of the node's nearest point.
PatchPair build_patch_pair(const CoarsePair& coarse, const NodeAssignment& assign_x,
                           const NodeAssignment& assign_y, const PointCloud& cloud_x,
                           const PointCloud& cloud_y, const PointCloud& nodes_x,
                           const PointCloud& nodes_y, const FeatureSet& feat_x,
                           const FeatureSet& feat_y, std::size_t k, std::uint64_t seed);

}  // namespace cfreg
