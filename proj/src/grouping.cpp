#include "cfreg/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace cfreg {

namespace {

double node_index_cell(const PointCloud& nodes) {
    if (nodes.size() < 2) return 1.0;
    Eigen::Vector3d lo = nodes.points.front(), hi = nodes.points.front();
    for (const auto& p : nodes.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diag = (hi - lo).norm();
    const double cell = diag / std::cbrt(static_cast<double>(nodes.size()));
    return cell > 0.0 ? cell : 1.0;
}

std::size_t brute_nearest(const PointCloud& cloud, const Eigen::Vector3d& q) {
    std::size_t best = 0;
    double best2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double d2 = (cloud.points[i] - q).squaredNorm();
        if (d2 < best2) {
            best2 = d2;
            best = i;
        }
    }
    return best;
}

PatchSide build_side(const std::vector<std::size_t>& group, const PointCloud& cloud,
                     const Eigen::Vector3d& node, const FeatureSet& feat, std::size_t k,
                     std::mt19937_64& rng) {
    PatchSide side;
    side.indices.reserve(k);

    std::vector<std::size_t> members = group;
    if (members.empty()) {
        // Fall back to the node's nearest point, all slots repeated.
        const std::size_t nearest = brute_nearest(cloud, node);
        side.indices.assign(k, nearest);
        side.repeat_mask.assign(k, true);
    } else if (members.size() > k) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            const double da = (cloud.points[a] - node).squaredNorm();
            const double db = (cloud.points[b] - node).squaredNorm();
            if (da != db) return da < db;
            return a < b;
        });
        members.resize(k);
        std::sort(members.begin(), members.end());
        side.indices = members;
        side.repeat_mask.assign(k, false);
    } else {
        side.indices = members;
        side.repeat_mask.assign(members.size(), false);
        while (side.indices.size() < k) {
            side.indices.push_back(members[rng() % members.size()]);
            side.repeat_mask.push_back(true);
        }
    }

    side.coords.reserve(k);
    side.features.resize(static_cast<Eigen::Index>(k), feat.vectors.cols());
    for (std::size_t s = 0; s < k; ++s) {
        side.coords.push_back(cloud.points[side.indices[s]]);
        side.features.row(static_cast<Eigen::Index>(s)) =
            feat.vectors.row(static_cast<Eigen::Index>(side.indices[s]));
    }
    return side;
}

}  // namespace

NodeAssignment assign_points(const PointCloud& points, const PointCloud& nodes,
                             std::uint64_t seed) {
    if (nodes.empty()) throw std::invalid_argument("assign_points: nodes must be nonempty");

    NodeAssignment out;
    out.owner.resize(points.size());
    out.groups.assign(nodes.size(), {});

    NeighborIndex idx(nodes, node_index_cell(nodes));
    std::mt19937_64 rng(seed);
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto tied = idx.all_nearest(points.points[p]);
        std::size_t owner = tied.front();
        if (tied.size() > 1) owner = tied[rng() % tied.size()];
        out.owner[p] = owner;
        out.groups[owner].push_back(p);
    }
    return out;
}

PatchPair build_patch_pair(const CoarsePair& coarse, const NodeAssignment& assign_x,
                           const NodeAssignment& assign_y, const PointCloud& cloud_x,
                           const PointCloud& cloud_y, const PointCloud& nodes_x,
                           const PointCloud& nodes_y, const FeatureSet& feat_x,
                           const FeatureSet& feat_y, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("build_patch_pair: k must be >= 1");
    if (cloud_x.empty() || cloud_y.empty())
        throw std::invalid_argument("build_patch_pair: clouds must be nonempty");

    std::mt19937_64 rng(seed);
    PatchPair pair;
    pair.node_i = coarse.i;
    pair.node_j = coarse.j;
    pair.c_coarse = coarse.confidence;
    pair.x = build_side(assign_x.groups[coarse.i], cloud_x, nodes_x.points[coarse.i], feat_x, k,
                        rng);
    pair.y = build_side(assign_y.groups[coarse.j], cloud_y, nodes_y.points[coarse.j], feat_y, k,
                        rng);
    return pair;
}

}  // namespace cfreg
