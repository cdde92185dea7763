#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cfreg/metrics.hpp"

using namespace cfreg;

namespace {

PointCorrespondences identity_pairs(std::size_t n) {
    PointCorrespondences c;
    for (std::size_t i = 0; i < n; ++i) c.pairs.push_back({i, i, 1.0, 1.0, 1.0});
    return c;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("inlier ratio on exact matches is 1") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const RigidTransform gt{axis_angle_rotation({0, 0, 1}, 0.5), {0.2, 0.0, 0.1}};
    PointCloud cx, cy;
    for (int i = 0; i < 20; ++i) {
        cx.points.emplace_back(u(rng), u(rng), u(rng));
        cy.points.push_back(gt.apply(cx.points.back()));
    }
    CHECK(inlier_ratio(identity_pairs(20), cx, cy, gt, kDefaultTau1).value == 1.0);
}

TEST_CASE("inlier ratio with everything displaced past the threshold is 0") {
    PointCloud cx, cy;
    for (int i = 0; i < 5; ++i) {
        cx.points.emplace_back(0.1 * i, 0.0, 0.0);
        cy.points.emplace_back(0.1 * i + 2.0 * kDefaultTau1, 0.0, 0.0);
    }
    CHECK(inlier_ratio(identity_pairs(5), cx, cy, RigidTransform::identity(), kDefaultTau1)
              .value == 0.0);
}

TEST_CASE("inlier ratio counts constructed residuals") {
    // Residuals 0, 0.05, 0.09, 0.15: three of four inside tau1 = 0.10.
    PointCloud cx, cy;
    const double residuals[4] = {0.0, 0.05, 0.09, 0.15};
    for (int i = 0; i < 4; ++i) {
        cx.points.emplace_back(static_cast<double>(i), 0.0, 0.0);
        cy.points.emplace_back(static_cast<double>(i) + residuals[i], 0.0, 0.0);
    }
    const auto res = inlier_ratio(identity_pairs(4), cx, cy, RigidTransform::identity(), 0.10);
    CHECK(res.value == 0.75);
    CHECK_FALSE(res.degenerate);
}

TEST_CASE("inlier ratio of an empty set is flagged") {
    PointCloud cx, cy;
    const auto res = inlier_ratio(PointCorrespondences{}, cx, cy, RigidTransform::identity(),
                                  kDefaultTau1);
    CHECK(res.value == 0.0);
    CHECK(res.degenerate);
}

TEST_CASE("inlier ratio is order invariant") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud cx, cy;
    PointCorrespondences c;
    for (std::size_t i = 0; i < 30; ++i) {
        cx.points.emplace_back(u(rng), u(rng), u(rng));
        cy.points.emplace_back(u(rng), u(rng), u(rng));
        c.pairs.push_back({i, i, 1.0, 1.0, 1.0});
    }
    const double base =
        inlier_ratio(c, cx, cy, RigidTransform::identity(), 0.3).value;
    std::shuffle(c.pairs.begin(), c.pairs.end(), rng);
    CHECK(inlier_ratio(c, cx, cy, RigidTransform::identity(), 0.3).value == base);
}

TEST_CASE("feature matching recall uses a strict threshold") {
    CHECK(feature_matching_recall({1.0, 1.0}, kDefaultTau2) == 1.0);
    CHECK(feature_matching_recall({0.0, 0.0}, kDefaultTau2) == 0.0);
    CHECK(feature_matching_recall({0.04, 0.06}, 0.05) == 0.5);
    CHECK(feature_matching_recall({0.05}, 0.05) == 0.0);  // not strictly larger
}

TEST_CASE("rmse and registration recall") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const RigidTransform gt{axis_angle_rotation({1, 0, 0}, 0.3), {0.1, -0.2, 0.3}};
    PointCloud cx, cy;
    for (int i = 0; i < 50; ++i) {
        cx.points.emplace_back(u(rng), u(rng), u(rng));
        cy.points.push_back(gt.apply(cx.points.back()));
    }
    const auto gt_set = gt_correspondences(cx, cy, gt, kDefaultTau1);
    REQUIRE(gt_set.size() == 50);

    CHECK(rmse(gt_set, cx, cy, gt) < 1e-12);

    // Constant 0.3 m translation offset: every residual is 0.3 exactly.
    RigidTransform off = gt;
    off.translation += Eigen::Vector3d(0.3, 0.0, 0.0);
    const double e = rmse(gt_set, cx, cy, off);
    CHECK(e == doctest::Approx(0.3).epsilon(1e-12));

    const auto [rmses, rr] = rmse_and_rr({gt, off}, {gt_set, gt_set}, {&cx, &cx}, {&cy, &cy},
                                         kDefaultTau3);
    CHECK(rmses[0] < 1e-12);
    CHECK(rmses[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rr == 0.5);

    CHECK_THROWS_AS(rmse({}, cx, cy, gt), std::invalid_argument);
}

TEST_CASE("gt correspondences are mutual nearest neighbors within tau1") {
    PointCloud cx, cy;
    cx.points = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {5.0, 0.0, 0.0}};
    cy.points = {{0.01, 0.0, 0.0}, {1.02, 0.0, 0.0}, {9.0, 0.0, 0.0}};
    const auto set = gt_correspondences(cx, cy, RigidTransform::identity(), 0.10);
    REQUIRE(set.size() == 2);
    CHECK(set[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(set[1] == std::pair<std::size_t, std::size_t>{1, 1});
}

TEST_CASE("rte and rre of the exact pose are zero") {
    const RigidTransform gt{axis_angle_rotation({0.3, 0.2, 0.9}, 1.1), {0.5, 0.6, 0.7}};
    const auto [rte, rre] = rte_rre(gt, gt);
    CHECK(rte == 0.0);
    CHECK(rre == 0.0);
}

TEST_CASE("pure translation error") {
    RigidTransform est;
    est.translation = {1.0, 0.0, 0.0};
    const auto [rte, rre] = rte_rre(est, RigidTransform::identity());
    CHECK(rte == 1.0);
    CHECK(rre == 0.0);
}

TEST_CASE("90 degree rotation difference") {
    RigidTransform est{axis_angle_rotation({0, 0, 1}, std::numbers::pi / 2.0), {0.2, 0.0, 0.0}};
    const auto [rte, rre] = rte_rre(est, RigidTransform::identity());
    CHECK(std::abs(rte - 0.2) < 1e-12);
    CHECK(std::abs(rre - std::numbers::pi / 2.0) < 1e-9);
}

TEST_CASE("rre stays in range with clamping") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ang(0.0, 3.14);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Vector3d a{g(rng), g(rng), g(rng)}, b{g(rng), g(rng), g(rng)};
        const RigidTransform t1{axis_angle_rotation(a, ang(rng)), {0, 0, 0}};
        const RigidTransform t2{axis_angle_rotation(b, ang(rng)), {0, 0, 0}};
        const auto [rte, rre] = rte_rre(t1, t2);
        CHECK(rte >= 0.0);
        CHECK(rre >= 0.0);
        CHECK(rre <= std::numbers::pi);
    }
    // Equal rotations through a 180 degree axis flip hit the trace boundary.
    const RigidTransform r180{axis_angle_rotation({1, 0, 0}, std::numbers::pi), {0, 0, 0}};
    const auto [rte, rre] = rte_rre(r180, r180);
    CHECK(rre == 0.0);
    (void)rte;
}

}  // TEST_SUITE
