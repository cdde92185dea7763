#pragma once

#include <cstdint>

#include "cfreg/types.hpp"

namespace cfreg {

/// Desk-scale benchmark pair with known pose. `gt` maps source coordinates
/// into the target frame. `measured_overlap` is the fraction of source
/// points with a target point strictly within the overlap threshold after
/// alignment; construction drives it to within +-10% of `nominal_overlap`.
struct SyntheticScene {
    PointCloud source;
    PointCloud target;
    RigidTransform gt;
    double nominal_overlap = 1.0;
    double measured_overlap = 1.0;
};

struct SceneOptions {
    std::uint64_t seed = 0;
    std::size_t n_points = 5000;
    double overlap = 0.7;            // in (0, 1]
    double noise_sigma = 0.0;        // per-point Gaussian noise (m)
    double transform_magnitude = 0.5;  // rotation angle (rad) and translation norm (m)
    double overlap_tau = 0.05;       // visibility threshold for the overlap measure (m)
};

/// Samples a structured scene (planes, spheres, boxes), crops two views that
/// share the requested overlap fraction, applies a random rigid transform to
/// the target view and adds noise. Bit-identical for a fixed option set.
SyntheticScene generate_scene(const SceneOptions& opts);

}  // namespace cfreg
