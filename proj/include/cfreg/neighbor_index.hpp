#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cfreg/types.hpp"

namespace cfreg {

/// Exact spatial index over a point cloud, backed by a uniform grid hash.
/// radius_query returns exactly the indices with Euclidean distance <= r;
/// there is no approximation anywhere. Read-only after construction.
class NeighborIndex {
public:
    /// `cell_size` only affects speed, not results. It should be on the
    /// order of typical query radii.
    NeighborIndex(const PointCloud& cloud, double cell_size);

    /// All indices i with ||p_i - q|| <= r, sorted ascending.
    std::vector<std::size_t> radius_query(const Eigen::Vector3d& q, double r) const;

    /// True if any point lies strictly within `r` of q (Eq.-3-style test).
    bool has_point_within(const Eigen::Vector3d& q, double r) const;

    /// Index of the closest point, lowest index on exact ties.
    /// Empty cloud yields nullopt.
    std::optional<std::size_t> nearest(const Eigen::Vector3d& q) const;

    /// All indices whose distance to q equals the minimum exactly.
    std::vector<std::size_t> all_nearest(const Eigen::Vector3d& q) const;

    std::size_t size() const { return points_.size(); }
    double cell_size() const { return cell_; }

private:
    struct CellKey {
        std::int64_t x, y, z;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        std::size_t operator()(const CellKey& k) const;
    };

    CellKey key_of(const Eigen::Vector3d& p) const;

    std::vector<Eigen::Vector3d> points_;
    double cell_;
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid_;
};

}  // namespace cfreg
