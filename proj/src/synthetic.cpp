#include "cfreg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "cfreg/neighbor_index.hpp"

namespace cfreg {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::Vector3d random_unit(Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = {g(rng), g(rng), g(rng)};
    } while (v.norm() < 1e-9);
    return v.normalized();
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    const Eigen::Vector3d axis = random_unit(rng);
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    return axis_angle_rotation(axis, angle);
}

struct Primitive {
    enum Kind { kPlane, kSphere, kBox } kind;
    Eigen::Vector3d center;
    Eigen::Matrix3d rot;      // local-to-world
    Eigen::Vector3d half;     // plane: (a, b, -); box: half extents; sphere: (r, -, -)

    double area() const {
        switch (kind) {
            case kPlane:
                return 4.0 * half.x() * half.y();
            case kSphere:
                return 4.0 * std::numbers::pi * half.x() * half.x();
            case kBox:
                return 8.0 * (half.x() * half.y() + half.y() * half.z() +
                              half.z() * half.x());
        }
        return 0.0;
    }

    Eigen::Vector3d sample(Rng& rng) const {
        switch (kind) {
            case kPlane: {
                const double u = uniform(rng, -half.x(), half.x());
                const double v = uniform(rng, -half.y(), half.y());
                return center + rot * Eigen::Vector3d(u, v, 0.0);
            }
            case kSphere:
                return center + half.x() * random_unit(rng);
            case kBox: {
                // Face picked proportionally to its area.
                const double axy = half.x() * half.y();
                const double ayz = half.y() * half.z();
                const double azx = half.z() * half.x();
                const double total = 2.0 * (axy + ayz + azx);
                double pick = uniform(rng, 0.0, total);
                int axis;  // fixed coordinate of the face
                if (pick < 2.0 * ayz) axis = 0;
                else if (pick < 2.0 * (ayz + azx)) axis = 1;
                else axis = 2;
                const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
                Eigen::Vector3d local;
                for (int a = 0; a < 3; ++a)
                    local(a) = uniform(rng, -half(a), half(a));
                local(axis) = side * half(axis);
                return center + rot * local;
            }
        }
        return center;
    }
};

// Desk-scale clutter (~0.8 m extent): two support planes plus a spread of
// small spheres and boxes so every descriptor neighborhood sees a distinct
// constellation.
std::vector<Primitive> make_primitives(Rng& rng) {
    std::vector<Primitive> prims;
    auto center = [&]() {
        return Eigen::Vector3d(uniform(rng, 0.15, 0.65), uniform(rng, 0.15, 0.65),
                               uniform(rng, 0.15, 0.55));
    };
    for (int i = 0; i < 3; ++i) {
        Primitive p;
        p.kind = Primitive::kPlane;
        p.center = center();
        p.rot = random_rotation(rng);
        p.half = {uniform(rng, 0.06, 0.14), uniform(rng, 0.06, 0.14), 0.0};
        prims.push_back(p);
    }
    for (int i = 0; i < 3; ++i) {
        Primitive p;
        p.kind = Primitive::kSphere;
        p.center = center();
        p.rot = Eigen::Matrix3d::Identity();
        p.half = {uniform(rng, 0.025, 0.09), 0.0, 0.0};
        prims.push_back(p);
    }
    for (int i = 0; i < 26; ++i) {
        Primitive p;
        p.kind = Primitive::kBox;
        p.center = center();
        p.rot = random_rotation(rng);
        p.half = {uniform(rng, 0.015, 0.07), uniform(rng, 0.015, 0.07),
                  uniform(rng, 0.015, 0.07)};
        prims.push_back(p);
    }
    return prims;
}

std::vector<std::size_t> allocate_counts(const std::vector<Primitive>& prims, std::size_t n) {
    double total = 0.0;
    for (const auto& p : prims) total += p.area();
    std::vector<std::size_t> counts(prims.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < prims.size(); ++i) {
        const double exact = static_cast<double>(n) * prims[i].area() / total;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) counts[remainders[r % remainders.size()].second]++;
    return counts;
}

}  // namespace

SyntheticScene generate_scene(const SceneOptions& opts) {
    if (!(opts.overlap > 0.0 && opts.overlap <= 1.0))
        throw std::invalid_argument("generate_scene: overlap must lie in (0, 1]");
    if (opts.n_points < 1) throw std::invalid_argument("generate_scene: n_points must be >= 1");

    Rng rng(opts.seed);
    const auto prims = make_primitives(rng);

    // Ground-truth pose: rotation angle and translation norm both equal the
    // requested magnitude.
    const Eigen::Vector3d axis = random_unit(rng);
    const Eigen::Vector3d tdir = random_unit(rng);
    RigidTransform gt{axis_angle_rotation(axis, opts.transform_magnitude),
                      opts.transform_magnitude * tdir};

    const Eigen::Vector3d crop_dir = random_unit(rng);

    // Smooth sampling-density gradient across the scene, like the
    // range/incidence falloff of a real scan. Both views crop the same
    // sampled cloud, so the density signal is consistent across them.
    const Eigen::Vector3d grad_dir = random_unit(rng);
    const Eigen::Vector3d domain_center(0.4, 0.4, 0.35);
    auto sample_weight = [&](const Eigen::Vector3d& p) {
        const double t = (p - domain_center).dot(grad_dir) / 0.5;
        return std::clamp(1.0 + 0.25 * t, 0.7, 1.3) / 1.3;
    };

    // Procedural surface texture: a fixed sum of displacement waves applied
    // to the world geometry, so surfaces are rough at the matching scale the
    // way scanned material is. Shared by both views by construction.
    struct Wave {
        Eigen::Vector3d dir;
        Eigen::Vector3d amp;
        double freq;
        double phase;
    };
    std::vector<Wave> waves;
    for (int w = 0; w < 8; ++w) {
        Wave wave;
        wave.dir = random_unit(rng);
        wave.amp = uniform(rng, 0.005, 0.012) * random_unit(rng);
        wave.freq = 2.0 * std::numbers::pi / uniform(rng, 0.06, 0.16);
        wave.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        waves.push_back(wave);
    }
    auto displace = [&](const Eigen::Vector3d& p) {
        Eigen::Vector3d out = p;
        for (const auto& w : waves) out += w.amp * std::cos(w.freq * w.dir.dot(p) + w.phase);
        return out;
    };

    const auto counts = allocate_counts(prims, opts.n_points);
    std::vector<Eigen::Vector3d> scene;
    scene.reserve(opts.n_points);
    std::uniform_real_distribution<double> accept(0.0, 1.0);
    for (std::size_t i = 0; i < prims.size(); ++i)
        for (std::size_t c = 0; c < counts[i]; ++c) {
            Eigen::Vector3d p;
            do {
                p = prims[i].sample(rng);
            } while (accept(rng) > sample_weight(p));
            scene.push_back(displace(p));
        }

    std::normal_distribution<double> noise(0.0, 1.0);
    auto draw_noise = [&]() {
        std::vector<Eigen::Vector3d> v(scene.size(), Eigen::Vector3d::Zero());
        if (opts.noise_sigma > 0.0)
            for (auto& e : v)
                e = opts.noise_sigma * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
        return v;
    };
    const auto noise_src = draw_noise();
    const auto noise_tgt = draw_noise();

    // Window the scene along the crop direction: each view keeps a fraction
    // s of the points (lowest / highest projections); shared points overlap.
    std::vector<std::size_t> order(scene.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> proj(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) proj[i] = crop_dir.dot(scene[i]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (proj[a] != proj[b]) return proj[a] < proj[b];
        return a < b;
    });

    auto build = [&](double s, SyntheticScene& out) {
        const std::size_t w =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                         s * static_cast<double>(scene.size()))));
        std::vector<std::size_t> src_idx(order.begin(),
                                         order.begin() + static_cast<std::ptrdiff_t>(w));
        std::vector<std::size_t> tgt_idx(order.end() - static_cast<std::ptrdiff_t>(w),
                                         order.end());
        std::sort(src_idx.begin(), src_idx.end());
        std::sort(tgt_idx.begin(), tgt_idx.end());
        out.source.points.clear();
        out.target.points.clear();
        for (std::size_t i : src_idx) out.source.points.push_back(scene[i] + noise_src[i]);
        for (std::size_t i : tgt_idx) out.target.points.push_back(gt.apply(scene[i]) + noise_tgt[i]);
    };

    auto measure = [&](const SyntheticScene& sc) {
        const NeighborIndex idx(sc.target, std::max(opts.overlap_tau, 1e-6));
        std::size_t visible = 0;
        for (const auto& p : sc.source.points)
            if (idx.has_point_within(gt.apply(p), opts.overlap_tau)) ++visible;
        return static_cast<double>(visible) / static_cast<double>(sc.source.size());
    };

    SyntheticScene out;
    out.gt = gt;
    out.nominal_overlap = opts.overlap;

    if (opts.overlap >= 1.0) {
        build(1.0, out);
        out.measured_overlap = measure(out);
        return out;
    }

    // The measured fraction grows with the window size; bisect on it.
    double lo = 0.02, hi = 1.0;
    double best_s = 1.0, best_err = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 28; ++it) {
        const double mid = 0.5 * (lo + hi);
        build(mid, out);
        const double m = measure(out);
        const double err = std::abs(m - opts.overlap);
        if (err < best_err) {
            best_err = err;
            best_s = mid;
        }
        if (m < opts.overlap) lo = mid;
        else hi = mid;
    }
    build(best_s, out);
    out.measured_overlap = measure(out);
    return out;
}

}  // namespace cfreg
