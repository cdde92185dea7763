#pragma once

#include <cstdint>
#include <vector>

#include "cfreg/types.hpp"

namespace cfreg {

struct VoxelResult {
    PointCloud cloud;
    std::vector<std::size_t> kept_indices;  // into the input cloud, ascending
};

/// Voxel-grid down-sampling that keeps one original point per occupied voxel
/// (no centroid averaging). When several points fall into the same voxel a
/// seeded-random one is picked. Voxel key = floor(coord / voxel_size) per
/// axis; boundary points belong to the lower cell. Deterministic per seed.
VoxelResult voxel_downsample(const PointCloud& c, double voxel_size, std::uint64_t seed);

}  // namespace cfreg
