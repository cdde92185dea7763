#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace cfreg {

/// A 3D point cloud in meters. Point order is stable: indices are the
/// identities referenced by correspondences throughout the pipeline.
struct PointCloud {
    std::vector<Eigen::Vector3d> points;

    PointCloud() = default;
    explicit PointCloud(std::vector<Eigen::Vector3d> pts) : points(std::move(pts)) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    const Eigen::Vector3d& operator[](std::size_t i) const { return points[i]; }
    Eigen::Vector3d& operator[](std::size_t i) { return points[i]; }

    bool all_finite() const {
        for (const auto& p : points)
            if (!p.allFinite()) return false;
        return true;
    }
};

/// SE(3) pose: y = rotation * x + translation.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    RigidTransform() = default;
    RigidTransform(const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
        : rotation(r), translation(t) {}

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return rotation * p + translation;
    }

    RigidTransform inverse() const {
        return {rotation.transpose(), -(rotation.transpose() * translation)};
    }

    /// Composition: (a * b)(p) == a(b(p)).
    RigidTransform operator*(const RigidTransform& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    static RigidTransform from_matrix(const Eigen::Matrix4d& m) {
        return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
    }

    /// Orthonormality and det(+1) within `tol` per entry.
    bool is_rigid(double tol = 1e-9) const {
        Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
        if (err.cwiseAbs().maxCoeff() > tol) return false;
        return std::abs(rotation.determinant() - 1.0) <= tol;
    }

    static RigidTransform identity() { return {}; }
};

inline PointCloud apply_transform(const RigidTransform& t, const PointCloud& c) {
    PointCloud out;
    out.points.reserve(c.size());
    for (const auto& p : c.points) out.points.push_back(t.apply(p));
    return out;
}

/// Rotation by `angle` radians around unit `axis`.
inline Eigen::Matrix3d axis_angle_rotation(const Eigen::Vector3d& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace cfreg
