#include "cfreg/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfreg {

namespace {

std::int64_t cell_coord(double v, double cell) {
    // Points exactly on a boundary belong to the lower cell.
    return static_cast<std::int64_t>(std::floor(v / cell));
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::size_t NeighborIndex::CellHash::operator()(const CellKey& k) const {
    std::uint64_t h = mix(static_cast<std::uint64_t>(k.x));
    h = mix(h ^ static_cast<std::uint64_t>(k.y));
    h = mix(h ^ static_cast<std::uint64_t>(k.z));
    return static_cast<std::size_t>(h);
}

NeighborIndex::CellKey NeighborIndex::key_of(const Eigen::Vector3d& p) const {
    return {cell_coord(p.x(), cell_), cell_coord(p.y(), cell_), cell_coord(p.z(), cell_)};
}

NeighborIndex::NeighborIndex(const PointCloud& cloud, double cell_size)
    : points_(cloud.points), cell_(cell_size) {
    if (cell_size <= 0.0) throw std::invalid_argument("NeighborIndex: cell_size must be > 0");
    grid_.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) grid_[key_of(points_[i])].push_back(i);
}

std::vector<std::size_t> NeighborIndex::radius_query(const Eigen::Vector3d& q, double r) const {
    std::vector<std::size_t> out;
    if (r < 0.0 || points_.empty()) return out;
    const double r2 = r * r;
    const std::int64_t x0 = cell_coord(q.x() - r, cell_), x1 = cell_coord(q.x() + r, cell_);
    const std::int64_t y0 = cell_coord(q.y() - r, cell_), y1 = cell_coord(q.y() + r, cell_);
    const std::int64_t z0 = cell_coord(q.z() - r, cell_), z1 = cell_coord(q.z() + r, cell_);
    for (std::int64_t x = x0; x <= x1; ++x)
        for (std::int64_t y = y0; y <= y1; ++y)
            for (std::int64_t z = z0; z <= z1; ++z) {
                auto it = grid_.find({x, y, z});
                if (it == grid_.end()) continue;
                for (std::size_t i : it->second)
                    if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
            }
    std::sort(out.begin(), out.end());
    return out;
}

bool NeighborIndex::has_point_within(const Eigen::Vector3d& q, double r) const {
    if (r <= 0.0 || points_.empty()) return false;
    const double r2 = r * r;
    const std::int64_t x0 = cell_coord(q.x() - r, cell_), x1 = cell_coord(q.x() + r, cell_);
    const std::int64_t y0 = cell_coord(q.y() - r, cell_), y1 = cell_coord(q.y() + r, cell_);
    const std::int64_t z0 = cell_coord(q.z() - r, cell_), z1 = cell_coord(q.z() + r, cell_);
    for (std::int64_t x = x0; x <= x1; ++x)
        for (std::int64_t y = y0; y <= y1; ++y)
            for (std::int64_t z = z0; z <= z1; ++z) {
                auto it = grid_.find({x, y, z});
                if (it == grid_.end()) continue;
                for (std::size_t i : it->second)
                    if ((points_[i] - q).squaredNorm() < r2) return true;
            }
    return false;
}

std::optional<std::size_t> NeighborIndex::nearest(const Eigen::Vector3d& q) const {
    if (points_.empty()) return std::nullopt;
    const CellKey c = key_of(q);
    double best2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    // Expand in Chebyshev shells; every point of a shell-s cell is at least
    // (s-1)*cell_ from q, so once best2 <= ((s-1)*cell_)^2 no later shell can win.
    for (std::int64_t s = 0;; ++s) {
        if (s > 0 && !std::isinf(best2)) {
            const double bound = static_cast<double>(s - 1) * cell_;
            if (best2 <= bound * bound) break;
        }
        for (std::int64_t dx = -s; dx <= s; ++dx)
            for (std::int64_t dy = -s; dy <= s; ++dy)
                for (std::int64_t dz = -s; dz <= s; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != s) continue;
                    auto it = grid_.find({c.x + dx, c.y + dy, c.z + dz});
                    if (it == grid_.end()) continue;
                    for (std::size_t i : it->second) {
                        const double d2 = (points_[i] - q).squaredNorm();
                        if (d2 < best2 || (d2 == best2 && i < best)) {
                            best2 = d2;
                            best = i;
                        }
                    }
                }
    }
    return best;
}

std::vector<std::size_t> NeighborIndex::all_nearest(const Eigen::Vector3d& q) const {
    auto n = nearest(q);
    if (!n) return {};
    const double d2 = (points_[*n] - q).squaredNorm();
    // Inflate the scan radius: sqrt(d2)^2 can round below d2, which would
    // drop the nearest point itself. The exact ==d2 filter removes extras.
    const double scan_r = std::sqrt(d2) * (1.0 + 1e-12) + 1e-300;
    auto cands = radius_query(q, scan_r);
    std::vector<std::size_t> out;
    for (std::size_t i : cands)
        if ((points_[i] - q).squaredNorm() == d2) out.push_back(i);
    return out;
}

}  // namespace cfreg
