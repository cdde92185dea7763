#include "cfreg/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "cfreg/procrustes.hpp"

namespace cfreg {

namespace {

std::size_t count_inliers(const RigidTransform& t, const std::vector<Eigen::Vector3d>& xs,
                          const std::vector<Eigen::Vector3d>& ys, double tau,
                          std::vector<bool>* mask = nullptr) {
    const double tau2 = tau * tau;
    std::size_t count = 0;
    if (mask) mask->assign(xs.size(), false);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const bool in = (t.apply(xs[i]) - ys[i]).squaredNorm() <= tau2;
        if (in) {
            ++count;
            if (mask) (*mask)[i] = true;
        }
    }
    return count;
}

// Adaptive upper bound on the hypotheses needed to hit an all-inlier sample
// with the configured confidence.
std::size_t needed_iters(double inlier_ratio, double confidence, std::size_t cap) {
    if (inlier_ratio <= 0.0) return cap;
    const double w3 = inlier_ratio * inlier_ratio * inlier_ratio;
    if (w3 >= 1.0) return 1;
    const double denom = std::log1p(-w3);
    if (denom == 0.0) return cap;
    const double n = std::log(1.0 - confidence) / denom;
    if (!std::isfinite(n) || n >= static_cast<double>(cap)) return cap;
    return static_cast<std::size_t>(std::ceil(n));
}

}  // namespace

RegistrationResult ransac(const PointCorrespondences& c, const PointCloud& cloud_x,
                          const PointCloud& cloud_y, const RansacOptions& opts) {
    const std::size_t n = c.size();
    if (n < 3) throw std::runtime_error("ransac: needs >= 3 correspondences");

    std::vector<Eigen::Vector3d> xs, ys;
    xs.reserve(n);
    ys.reserve(n);
    for (const auto& pair : c.pairs) {
        xs.push_back(cloud_x.points[pair.i]);
        ys.push_back(cloud_y.points[pair.j]);
    }

    std::mt19937_64 rng(opts.seed);
    auto draw = [&](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };

    // Local optimization: refit on the consensus at an annealed (shrinking)
    // threshold so the precise core of the consensus snaps the pose, then
    // recount at the nominal threshold. Rough minimal-sample poses converge
    // onto the true optimum this way instead of plateauing on sloppy matches.
    auto refit_at = [&](const RigidTransform& t, double tau,
                        RigidTransform& out) {
        std::vector<bool> mask;
        const std::size_t count = count_inliers(t, xs, ys, tau, &mask);
        if (count < 10) return false;
        std::vector<Eigen::Vector3d> ix, iy;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) {
                ix.push_back(xs[i]);
                iy.push_back(ys[i]);
            }
        try {
            out = procrustes(ix, iy);
        } catch (const std::runtime_error&) {
            return false;
        }
        return true;
    };

    auto locally_optimize = [&](const RigidTransform& seed_t, std::size_t seed_count) {
        RigidTransform t = seed_t;
        for (double scale : {1.0, 0.75, 0.55}) {
            RigidTransform refit;
            if (!refit_at(t, opts.inlier_tau * scale, refit)) break;
            t = refit;
        }
        const std::size_t final_count = count_inliers(t, xs, ys, opts.inlier_tau);
        if (final_count > seed_count) return std::make_pair(t, final_count);
        return std::make_pair(seed_t, seed_count);
    };

    // Redescending-weight polish: iteratively reweighted Procrustes with a
    // Tukey biweight, annealing the scale towards the measurement noise so
    // the precise core dominates without hard-threshold overfitting.
    auto irls_polish = [&](RigidTransform t) {
        for (int round = 0; round < 12; ++round) {
            const double c = opts.inlier_tau * std::max(0.3, 0.6 - 0.04 * round);
            std::vector<double> w(n, 0.0);
            std::size_t positive = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = (t.apply(xs[i]) - ys[i]).norm();
                if (r >= c) continue;
                const double u = 1.0 - (r / c) * (r / c);
                w[i] = u * u;
                ++positive;
            }
            if (positive < 10) break;
            try {
                t = procrustes(xs, ys, w);
            } catch (const std::runtime_error&) {
                break;
            }
        }
        return t;
    };

    RigidTransform best_t;
    std::size_t best_inliers = 0;
    bool have_best = false;
    std::size_t iters_done = 0;
    std::size_t adaptive_cap = opts.max_iters;

    for (std::size_t it = 0; it < opts.max_iters && it < adaptive_cap; ++it) {
        ++iters_done;
        std::size_t a = draw(n), b = draw(n), d = draw(n);
        if (a == b || a == d || b == d) continue;

        RigidTransform t;
        try {
            t = procrustes({xs[a], xs[b], xs[d]}, {ys[a], ys[b], ys[d]});
        } catch (const std::runtime_error&) {
            continue;  // degenerate minimal sample
        }

        const std::size_t inliers = count_inliers(t, xs, ys, opts.inlier_tau);
        if (inliers >= 3 && 2 * inliers > best_inliers) {
            const auto [opt_t, opt_count] = locally_optimize(t, inliers);
            if (opt_count > best_inliers) {
                best_inliers = opt_count;
                best_t = opt_t;
                have_best = true;
                const double ratio =
                    static_cast<double>(best_inliers) / static_cast<double>(n);
                adaptive_cap = std::min(adaptive_cap,
                                        iters_done + needed_iters(ratio, opts.confidence,
                                                                  opts.max_iters));
                if (ratio > opts.early_exit_ratio) break;
            }
        }
    }

    if (!have_best || best_inliers < 3)
        throw std::runtime_error("ransac: no valid hypothesis found");

    // Final consensus refit (weighted, redescending), then recompute the
    // mask under the refined transform.
    RegistrationResult res;
    res.transform = irls_polish(best_t);
    const std::size_t polished = count_inliers(res.transform, xs, ys, opts.inlier_tau);
    if (polished < 3) res.transform = best_t;
    res.inlier_count = count_inliers(res.transform, xs, ys, opts.inlier_tau, &res.inlier_mask);
    res.iterations_used = iters_done;
    return res;
}

}  // namespace cfreg
