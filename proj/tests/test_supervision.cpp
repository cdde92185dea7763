#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfreg/supervision.hpp"

using namespace cfreg;

namespace {

using Group = std::vector<Eigen::Vector3d>;

// Independent double-loop implementation of the Eq.-3/4 style ratio: no
// spatial index, strict threshold.
double oracle_ratio(const Group& group, const std::vector<Eigen::Vector3d>& other,
                    const RigidTransform& gt, double tau_p) {
    std::size_t visible = 0;
    for (const auto& p : group) {
        const Eigen::Vector3d tp = gt.apply(p);
        for (const auto& q : other)
            if ((tp - q).norm() < tau_p) {
                ++visible;
                break;
            }
    }
    return static_cast<double>(visible) / static_cast<double>(group.size());
}

ConfidenceMatrix conf_of(const Eigen::MatrixXd& values) {
    ConfidenceMatrix c;
    c.values = values;
    return c;
}

PatchPair patch_from_coords(const std::vector<Eigen::Vector3d>& xs,
                            const std::vector<Eigen::Vector3d>& ys,
                            const std::vector<bool>& rx, const std::vector<bool>& ry) {
    PatchPair p;
    p.x.coords = xs;
    p.y.coords = ys;
    p.x.repeat_mask = rx;
    p.y.repeat_mask = ry;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        p.x.indices.push_back(s);
        p.y.indices.push_back(s);
    }
    p.x.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), 1);
    p.y.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ys.size()), 1);
    return p;
}

}  // namespace

TEST_SUITE("supervision") {

TEST_CASE("overlap_ratio on identical clouds is 1") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Group group;
    PointCloud other;
    for (int i = 0; i < 20; ++i) {
        const Eigen::Vector3d p(u(rng), u(rng), u(rng));
        group.push_back(p);
        other.points.push_back(p);
    }
    const NeighborIndex idx(other, 0.05);
    CHECK(overlap_ratio(group, idx, RigidTransform::identity(), 0.01) == 1.0);
}

TEST_CASE("overlap_ratio is 0 when the other cloud is far") {
    Group group{{0.0, 0.0, 0.0}, {0.1, 0.0, 0.0}};
    PointCloud other;
    other.points.emplace_back(0.0, 0.0, 10.0);  // 10 * tau_p away
    const NeighborIndex idx(other, 1.0);
    CHECK(overlap_ratio(group, idx, RigidTransform::identity(), 1.0) == 0.0);
}

TEST_CASE("overlap_ratio counts exactly the visible quarter") {
    Group group{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, {3.0, 0.0, 0.0}};
    PointCloud other;
    other.points.emplace_back(0.0, 0.01, 0.0);  // only the first group point is close
    const NeighborIndex idx(other, 0.1);
    CHECK(overlap_ratio(group, idx, RigidTransform::identity(), 0.1) == 0.25);
}

TEST_CASE("overlap_ratio rejects an empty group") {
    PointCloud other;
    other.points.emplace_back(0.0, 0.0, 0.0);
    const NeighborIndex idx(other, 0.1);
    CHECK_THROWS_AS(overlap_ratio({}, idx, RigidTransform::identity(), 0.1),
                    std::invalid_argument);
}

TEST_CASE("pairwise_overlap_ratio trivial and asymmetric cases") {
    const RigidTransform gt{axis_angle_rotation({0, 0, 1}, 0.4), {0.2, -0.1, 0.3}};
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    Group gi;
    for (int i = 0; i < 10; ++i) gi.push_back({u(rng), u(rng), u(rng)});
    Group gj;
    for (const auto& p : gi) gj.push_back(gt.apply(p));
    CHECK(pairwise_overlap_ratio(gi, gj, gt, 1e-6) == 1.0);

    Group far;
    for (const auto& p : gi) far.push_back(gt.apply(p) + Eigen::Vector3d(50, 0, 0));
    CHECK(pairwise_overlap_ratio(gi, far, gt, 0.5) == 0.0);

    // Asymmetric sizes: r(i,j) != r(j,i) in general; both match the oracle.
    Group big = gi;
    big.push_back({5.0, 5.0, 5.0});
    big.push_back({6.0, 6.0, 6.0});
    const double rij = pairwise_overlap_ratio(big, gj, gt, 0.05);
    const double rji = pairwise_overlap_ratio(gj, big, gt.inverse(), 0.05);
    CHECK(rij == oracle_ratio(big, gj, gt, 0.05));
    CHECK(rji == oracle_ratio(gj, big, gt.inverse(), 0.05));
    CHECK(rij != rji);
}

TEST_CASE("weight matrix of a fully overlapping single-node scene") {
    Group g{{0.0, 0.0, 0.0}, {0.1, 0.0, 0.0}, {0.0, 0.1, 0.0}};
    PointCloud cloud;
    for (const auto& p : g) cloud.points.push_back(p);
    const auto w = build_weight_matrix({g}, {g}, cloud, cloud, RigidTransform::identity(), 0.01);
    REQUIRE(w.values.rows() == 2);
    CHECK(w.values(0, 0) == 1.0);
    CHECK(w.values(0, 1) == 0.0);
    CHECK(w.values(1, 0) == 0.0);
    CHECK(w.values(1, 1) == 0.0);
}

TEST_CASE("weight matrix of a fully disjoint scene") {
    Group gx{{0.0, 0.0, 0.0}, {0.1, 0.0, 0.0}};
    Group gy{{10.0, 0.0, 0.0}, {10.1, 0.0, 0.0}};
    PointCloud cx, cy;
    for (const auto& p : gx) cx.points.push_back(p);
    for (const auto& p : gy) cy.points.push_back(p);
    const auto w = build_weight_matrix({gx}, {gy}, cx, cy, RigidTransform::identity(), 0.05);
    CHECK(w.values(0, 0) == 0.0);
    CHECK(w.values(0, 1) == 1.0);
    CHECK(w.values(1, 0) == 1.0);
    CHECK(w.values(1, 1) == 0.0);
}

TEST_CASE("weight matrix matches hand-computed 50% overlap") {
    // Node X0 group: 4 points, exactly 2 with matches in Y0's group.
    Group gx0{{0.0, 0.0, 0.0}, {0.1, 0.0, 0.0}, {5.0, 5.0, 0.0}, {5.1, 5.0, 0.0}};
    Group gy0{{0.0, 0.0, 0.0}, {0.1, 0.0, 0.0}};
    // Second Y node far from everything.
    Group gy1{{20.0, 0.0, 0.0}};
    PointCloud cx, cy;
    for (const auto& p : gx0) cx.points.push_back(p);
    for (const auto& p : gy0) cy.points.push_back(p);
    for (const auto& p : gy1) cy.points.push_back(p);

    const auto w = build_weight_matrix({gx0}, {gy0, gy1}, cx, cy, RigidTransform::identity(),
                                       0.01);
    // r(x0, y0) = 2/4, r(y0, x0) = 2/2 -> min = 0.5.
    CHECK(w.values(0, 0) == 0.5);
    CHECK(w.values(0, 1) == 0.0);
    // Slack column: 1 - r(x0) with r(x0) = 2/4.
    CHECK(w.values(0, 2) == 0.5);
    // Slack row: y0 fully visible in X, y1 not at all.
    CHECK(w.values(1, 0) == 0.0);
    CHECK(w.values(1, 1) == 1.0);
    CHECK(w.values(1, 2) == 0.0);
}

TEST_CASE("weight matrix interior is symmetric under swapping the sides") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const RigidTransform gt{axis_angle_rotation({1, 1, 0}, 0.3), {0.1, 0.0, -0.2}};
    std::vector<Group> gx(3), gy(4);
    PointCloud cx, cy;
    for (auto& g : gx)
        for (int i = 0; i < 12; ++i) {
            g.push_back({u(rng), u(rng), u(rng)});
            cx.points.push_back(g.back());
        }
    for (auto& g : gy)
        for (int i = 0; i < 9; ++i) {
            g.push_back(gt.apply({u(rng) * 0.7, u(rng), u(rng)}));
            cy.points.push_back(g.back());
        }
    const auto w_xy = build_weight_matrix(gx, gy, cx, cy, gt, 0.2);
    const auto w_yx = build_weight_matrix(gy, gx, cy, cx, gt.inverse(), 0.2);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) CHECK(w_xy.values(i, j) == w_yx.values(j, i));
    CHECK((w_xy.values.array() >= 0.0).all());
    CHECK((w_xy.values.array() <= 1.0).all());
}

TEST_CASE("coarse loss is 0 when confidence is 1 wherever weighted") {
    Eigen::MatrixXd conf(2, 2), w(2, 2);
    conf << 1.0, 0.2, 0.3, 0.4;
    w << 1.0, 0.0, 0.0, 0.0;
    const auto loss = coarse_loss(conf_of(conf), WeightMatrix{w});
    CHECK_FALSE(loss.degenerate);
    CHECK(loss.value == 0.0);
}

TEST_CASE("coarse loss of two half-confidence cells is log 2") {
    Eigen::MatrixXd conf(2, 2), w(2, 2);
    conf << 0.5, 1.0, 1.0, 0.5;
    w << 1.0, 0.0, 0.0, 1.0;
    const auto loss = coarse_loss(conf_of(conf), WeightMatrix{w});
    CHECK(loss.value == doctest::Approx(0.6931471805599453).epsilon(1e-9));
}

TEST_CASE("coarse loss ignores zero-weight cells even at zero confidence") {
    Eigen::MatrixXd conf(2, 2), w(2, 2);
    conf << 1.0, 0.0, 0.0, 1.0;  // zeros only where the weight is zero
    w << 1.0, 0.0, 0.0, 2.0;
    const auto loss = coarse_loss(conf_of(conf), WeightMatrix{w});
    CHECK(loss.value == 0.0);
}

TEST_CASE("coarse loss weight-scaling invariance") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd conf = Eigen::MatrixXd::NullaryExpr(4, 4, [&]() { return u(rng); });
    Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(4, 4, [&]() { return u(rng); });
    const auto base = coarse_loss(conf_of(conf), WeightMatrix{w});
    for (double c : {0.5, 3.0, 1e6}) {
        const auto scaled = coarse_loss(conf_of(conf), WeightMatrix{Eigen::MatrixXd(c * w)});
        CHECK(std::abs(scaled.value - base.value) < 1e-12);
    }
}

TEST_CASE("coarse loss with zero total weight is degenerate") {
    Eigen::MatrixXd conf = Eigen::MatrixXd::Constant(2, 2, 0.5);
    const auto loss = coarse_loss(conf_of(conf), WeightMatrix{Eigen::MatrixXd::Zero(2, 2)});
    CHECK(loss.value == 0.0);
    CHECK(loss.degenerate);
}

TEST_CASE("fine binary of perfectly aligned patches is the identity pattern") {
    const std::vector<Eigen::Vector3d> xs{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    const PatchPair p = patch_from_coords(xs, xs, {false, false}, {false, false});
    const auto b = fine_binary(p, RigidTransform::identity(), 0.1);
    Eigen::MatrixXd want(3, 3);
    want << 1, 0, 0, 0, 1, 0, 0, 0, 0;
    CHECK((b.values - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fine binary zeroes the whole row of a repeated slot") {
    const std::vector<Eigen::Vector3d> xs{{0.0, 0.0, 0.0}, {5.0, 0.0, 0.0}};
    const std::vector<Eigen::Vector3d> ys{{0.0, 0.0, 0.0}, {9.0, 0.0, 0.0}};
    const PatchPair p = patch_from_coords(xs, ys, {false, true}, {false, false});
    const auto b = fine_binary(p, RigidTransform::identity(), 0.1);
    CHECK(b.values.row(1).cwiseAbs().maxCoeff() == 0.0);  // repeated incl. slack
    CHECK(b.values(0, 0) == 1.0);
    CHECK(b.values(2, 1) == 1.0);  // unmatched y slot counted in the slack row
}

TEST_CASE("fine binary equals the brute-force threshold matrix") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    const RigidTransform gt{axis_angle_rotation({0, 1, 0}, 0.7), {0.05, 0.1, -0.02}};
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t k = 2 + rng() % 4;
        std::vector<Eigen::Vector3d> xs, ys;
        std::vector<bool> rx, ry;
        for (std::size_t s = 0; s < k; ++s) {
            xs.push_back({u(rng), u(rng), u(rng)});
            ys.push_back(gt.apply({u(rng), u(rng), u(rng)}));
            rx.push_back(rng() % 4 == 0);
            ry.push_back(rng() % 4 == 0);
        }
        const PatchPair p = patch_from_coords(xs, ys, rx, ry);
        const double tau_p = 0.15;
        const auto b = fine_binary(p, gt, tau_p);

        Eigen::MatrixXd want = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if ((gt.apply(xs[i]) - ys[j]).norm() < tau_p)
                    want(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        for (std::size_t i = 0; i < k; ++i)
            want(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                std::max(0.0, 1.0 - want.row(static_cast<Eigen::Index>(i)).head(k).sum());
        for (std::size_t j = 0; j < k; ++j)
            want(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                std::max(0.0, 1.0 - want.col(static_cast<Eigen::Index>(j)).head(k).sum());
        for (std::size_t i = 0; i < k; ++i)
            if (rx[i]) want.row(static_cast<Eigen::Index>(i)).setZero();
        for (std::size_t j = 0; j < k; ++j)
            if (ry[j]) want.col(static_cast<Eigen::Index>(j)).setZero();
        CHECK((b.values - want).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("fine loss hand instances") {
    // All mass on confident cells: zero loss.
    Eigen::MatrixXd s1(2, 2), b1(2, 2);
    s1 << 1.0, 0.3, 0.3, 0.2;
    b1 << 1.0, 0.0, 0.0, 0.0;
    CHECK(fine_loss({conf_of(s1)}, {FineBinaryMatrix{b1}}).value == 0.0);

    // Two target cells at 0.5 and 0.25: (log 2 + log 4) / 2.
    Eigen::MatrixXd s2(2, 2), b2(2, 2);
    s2 << 0.5, 0.1, 0.25, 0.9;
    b2 << 1.0, 0.0, 1.0, 0.0;
    const auto loss = fine_loss({conf_of(s2)}, {FineBinaryMatrix{b2}});
    CHECK(loss.value == doctest::Approx(1.0397207708399179).epsilon(1e-9));

    // Cells with b = 0 are free.
    Eigen::MatrixXd s3 = s2;
    s3(0, 1) = 1e-9;
    s3(1, 1) = 0.99;
    CHECK(fine_loss({conf_of(s3)}, {FineBinaryMatrix{b2}}).value ==
          doctest::Approx(loss.value).epsilon(1e-15));

    // Zero total mass: degenerate.
    const auto degen = fine_loss({conf_of(s2)}, {FineBinaryMatrix{Eigen::MatrixXd::Zero(2, 2)}});
    CHECK(degen.value == 0.0);
    CHECK(degen.degenerate);
}

TEST_CASE("total loss combinations") {
    CHECK(total_loss({1.0, false}, {2.0, false}, 1.0) == 3.0);
    CHECK(total_loss({1.5, false}, {0.0, false}, 1.0) == 1.5);
    CHECK(total_loss({1.0, false}, {2.0, false}, 0.5) == 2.0);
}

TEST_CASE("loss gradients through sinkhorn match finite differences") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> uw(0.0, 1.0);
    const int iters = 25;

    // Coarse side: random scores and a random weight matrix.
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 4);
        ScoreMatrix s;
        s.values = Eigen::MatrixXd::NullaryExpr(n + 1, m + 1, [&]() { return u(rng); });
        s.mute_mask = BoolMatrix::Constant(n + 1, m + 1, false);
        WeightMatrix w;
        w.values = Eigen::MatrixXd::NullaryExpr(n + 1, m + 1, [&]() { return uw(rng); });
        w.values(n, m) = 0.0;

        SinkhornOptions opts;
        opts.iters = iters;
        opts.early_exit = false;
        const ConfidenceMatrix conf = sinkhorn(s, opts, SinkhornVariant::kCoarse);
        const Eigen::MatrixXd upstream = coarse_loss_upstream(conf, w);
        const Eigen::MatrixXd analytic = sinkhorn_grad(s, iters, SinkhornVariant::kCoarse,
                                                       upstream);

        auto loss_at = [&](const ScoreMatrix& sc) {
            return coarse_loss(sinkhorn(sc, opts, SinkhornVariant::kCoarse), w).value;
        };
        const double h = 1e-5;
        for (Eigen::Index i = 0; i <= n; ++i)
            for (Eigen::Index j = 0; j <= m; ++j) {
                ScoreMatrix plus = s, minus = s;
                plus.values(i, j) += h;
                minus.values(i, j) -= h;
                const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
                CHECK(std::abs(analytic(i, j) - fd) < 1e-4);
            }
    }

    // Fine side: random patch geometry drives the binary matrix.
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t k = 2 + rng() % 3;
        ScoreMatrix s;
        s.values = Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(k + 1),
                                                static_cast<Eigen::Index>(k + 1),
                                                [&]() { return u(rng); });
        s.mute_mask = BoolMatrix::Constant(static_cast<Eigen::Index>(k + 1),
                                           static_cast<Eigen::Index>(k + 1), false);
        s.mute_mask(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = true;
        FineBinaryMatrix b;
        b.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k + 1),
                                         static_cast<Eigen::Index>(k + 1));
        for (std::size_t i = 0; i < k; ++i)
            b.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(rng() % k)) = 1.0;

        SinkhornOptions opts;
        opts.iters = iters;
        opts.early_exit = false;
        const ConfidenceMatrix conf = sinkhorn(s, opts, SinkhornVariant::kFine);
        const double total = b.values.sum();
        const Eigen::MatrixXd upstream = fine_loss_upstream(conf, b, total);
        const Eigen::MatrixXd analytic = sinkhorn_grad(s, iters, SinkhornVariant::kFine,
                                                       upstream);

        auto loss_at = [&](const ScoreMatrix& sc) {
            return fine_loss({sinkhorn(sc, opts, SinkhornVariant::kFine)}, {b}).value;
        };
        const double h = 1e-5;
        for (std::size_t i = 0; i <= k; ++i)
            for (std::size_t j = 0; j <= k; ++j) {
                if (s.mute_mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                    continue;
                ScoreMatrix plus = s, minus = s;
                plus.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += h;
                minus.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= h;
                const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
                CHECK(std::abs(analytic(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)) -
                               fd) < 1e-4);
            }
    }
}

}  // TEST_SUITE
