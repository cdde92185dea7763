#pragma once

#include <cstdint>
#include <string>

namespace cfreg {

/// All pipeline constants in one place. Defaults target indoor/desk-scale
/// scenes with a 2.5 cm sampling voxel; the coarse node voxel, descriptor
/// radii and distance thresholds scale off it.
struct PipelineConfig {
    double v_f = 0.025;           // fine voxel (m): point sampling resolution
    double v_c = 0.10;            // coarse voxel (m): node spacing, 4 * v_f
    double node_radius = 0.25;    // node descriptor radius, 2.5 * v_c
    double point_radius = 0.125;  // point descriptor radius, 5 * v_f
    double z = 0.0;               // slack score
    int sinkhorn_iters = 100;
    double tau_c = 0.20;          // coarse confidence threshold
    std::size_t tau_m = 200;      // minimum coarse correspondence count
    std::size_t k = 64;           // truncated patch size
    double tau_f = 0.05;          // fine confidence threshold
    double tau_p = 0.05;          // overlap/visibility threshold, 2 * v_f
    std::size_t ransac_iters = 50000;
    double ransac_inlier_tau = 0.05;  // 2 * v_f
    std::size_t samples = 5000;       // correspondences fed to RANSAC
    std::uint64_t seed = 0;

    /// Derives the v_f-dependent fields from a new fine voxel size.
    static PipelineConfig scaled_to(double v_f);

    /// Throws std::invalid_argument on non-positive dimensional fields or
    /// v_c <= v_f.
    void validate() const;
};

/// Flat key/value text format ("key = value" lines, '#' comments).
/// Round-trips losslessly.
PipelineConfig read_config(const std::string& path);
void write_config(const std::string& path, const PipelineConfig& cfg);
std::string config_to_string(const PipelineConfig& cfg);

}  // namespace cfreg
