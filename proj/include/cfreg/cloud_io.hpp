#pragma once

#include <string>

#include "cfreg/types.hpp"

namespace cfreg {

/// PLY reader for ascii and binary_little_endian files with float or double
/// x/y/z vertex properties. Other vertex properties are skipped; non-vertex
/// elements are ignored. Throws std::runtime_error with the path on failure.
PointCloud read_ply(const std::string& path);

/// Writes x/y/z as float32 properties. `binary` selects binary_little_endian.
void write_ply(const std::string& path, const PointCloud& c, bool binary = false);

/// CSV with one "x,y,z" line per point.
PointCloud read_csv_cloud(const std::string& path);
void write_csv_cloud(const std::string& path, const PointCloud& c);

/// Dispatch on extension: .ply or .csv / .xyz.
PointCloud read_cloud(const std::string& path);

/// 4x4 row-major pose, whitespace-separated text.
RigidTransform read_pose(const std::string& path);
void write_pose(const std::string& path, const RigidTransform& t);

}  // namespace cfreg
