#include "cfreg/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace cfreg {

namespace {

struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
};

struct KeyHash {
    std::size_t operator()(const Key& k) const {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL;
        h ^= static_cast<std::uint64_t>(k.y) * 0xc2b2ae3d27d4eb4fULL;
        h ^= static_cast<std::uint64_t>(k.z) * 0x165667b19e3779f9ULL;
        h ^= h >> 29;
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

VoxelResult voxel_downsample(const PointCloud& c, double voxel_size, std::uint64_t seed) {
    if (voxel_size <= 0.0) throw std::invalid_argument("voxel_downsample: voxel_size must be > 0");
    VoxelResult res;
    if (c.empty()) return res;

    // Groups in first-touch order so the RNG draw sequence is independent of
    // hash-map iteration order.
    std::unordered_map<Key, std::size_t, KeyHash> slot;
    std::vector<std::vector<std::size_t>> groups;
    slot.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c.points[i];
        Key k{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
              static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
              static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
        auto it = slot.find(k);
        if (it == slot.end()) {
            slot.emplace(k, groups.size());
            groups.push_back({i});
        } else {
            groups[it->second].push_back(i);
        }
    }

    std::mt19937_64 rng(seed);
    res.kept_indices.reserve(groups.size());
    for (const auto& g : groups) {
        std::size_t pick = 0;
        if (g.size() > 1) pick = rng() % g.size();
        res.kept_indices.push_back(g[pick]);
    }
    std::sort(res.kept_indices.begin(), res.kept_indices.end());
    res.cloud.points.reserve(res.kept_indices.size());
    for (std::size_t i : res.kept_indices) res.cloud.points.push_back(c.points[i]);
    return res;
}

}  // namespace cfreg
