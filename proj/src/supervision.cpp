#include "cfreg/supervision.hpp"

#include <cmath>
#include <stdexcept>

namespace cfreg {

namespace {

constexpr double kLogClamp = 1e-12;

double clamped_log(double v) { return std::log(std::max(v, kLogClamp)); }

}  // namespace

double overlap_ratio(const std::vector<Eigen::Vector3d>& group, const NeighborIndex& other,
                     const RigidTransform& gt, double tau_p) {
    if (group.empty()) throw std::invalid_argument("overlap_ratio: empty group");
    std::size_t visible = 0;
    for (const auto& p : group)
        if (other.has_point_within(gt.apply(p), tau_p)) ++visible;
    return static_cast<double>(visible) / static_cast<double>(group.size());
}

double pairwise_overlap_ratio(const std::vector<Eigen::Vector3d>& group_i,
                              const std::vector<Eigen::Vector3d>& group_j,
                              const RigidTransform& gt, double tau_p) {
    if (group_i.empty()) throw std::invalid_argument("pairwise_overlap_ratio: empty group");
    const double tau2 = tau_p * tau_p;
    std::size_t visible = 0;
    for (const auto& p : group_i) {
        const Eigen::Vector3d tp = gt.apply(p);
        for (const auto& q : group_j) {
            if ((tp - q).squaredNorm() < tau2) {
                ++visible;
                break;
            }
        }
    }
    return static_cast<double>(visible) / static_cast<double>(group_i.size());
}

WeightMatrix build_weight_matrix(const std::vector<std::vector<Eigen::Vector3d>>& groups_x,
                                 const std::vector<std::vector<Eigen::Vector3d>>& groups_y,
                                 const PointCloud& cloud_x, const PointCloud& cloud_y,
                                 const RigidTransform& gt, double tau_p) {
    const Eigen::Index n = static_cast<Eigen::Index>(groups_x.size());
    const Eigen::Index m = static_cast<Eigen::Index>(groups_y.size());
    const RigidTransform gt_inv = gt.inverse();

    WeightMatrix w;
    w.values = Eigen::MatrixXd::Zero(n + 1, m + 1);

    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const double r_ij = pairwise_overlap_ratio(groups_x[static_cast<std::size_t>(i)],
                                                       groups_y[static_cast<std::size_t>(j)], gt,
                                                       tau_p);
            const double r_ji = pairwise_overlap_ratio(groups_y[static_cast<std::size_t>(j)],
                                                       groups_x[static_cast<std::size_t>(i)],
                                                       gt_inv, tau_p);
            w.values(i, j) = std::min(r_ij, r_ji);
        }

    const NeighborIndex idx_y(cloud_y, std::max(tau_p, 1e-6));
    const NeighborIndex idx_x(cloud_x, std::max(tau_p, 1e-6));
    for (Eigen::Index i = 0; i < n; ++i)
        w.values(i, m) = 1.0 - overlap_ratio(groups_x[static_cast<std::size_t>(i)], idx_y, gt,
                                             tau_p);
    for (Eigen::Index j = 0; j < m; ++j)
        w.values(n, j) = 1.0 - overlap_ratio(groups_y[static_cast<std::size_t>(j)], idx_x, gt_inv,
                                             tau_p);
    return w;
}

LossValue coarse_loss(const ConfidenceMatrix& conf, const WeightMatrix& w) {
    if (conf.values.rows() != w.values.rows() || conf.values.cols() != w.values.cols())
        throw std::invalid_argument("coarse_loss: shape mismatch");
    const double total = w.values.sum();
    if (total <= 0.0) return {0.0, true};
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.values.rows(); ++i)
        for (Eigen::Index j = 0; j < w.values.cols(); ++j) {
            const double wij = w.values(i, j);
            if (wij == 0.0) continue;  // 0 * log(0) = 0
            acc += wij * clamped_log(conf.values(i, j));
        }
    return {-acc / total, false};
}

FineBinaryMatrix fine_binary(const PatchPair& p, const RigidTransform& gt, double tau_p) {
    const Eigen::Index k = static_cast<Eigen::Index>(p.x.indices.size());
    FineBinaryMatrix b;
    b.values = Eigen::MatrixXd::Zero(k + 1, k + 1);

    const double tau2 = tau_p * tau_p;
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Vector3d tp = gt.apply(p.x.coords[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < k; ++j)
            if ((tp - p.y.coords[static_cast<std::size_t>(j)]).squaredNorm() < tau2)
                b.values(i, j) = 1.0;
    }
    for (Eigen::Index i = 0; i < k; ++i)
        b.values(i, k) = std::max(0.0, 1.0 - b.values.row(i).head(k).sum());
    for (Eigen::Index j = 0; j < k; ++j)
        b.values(k, j) = std::max(0.0, 1.0 - b.values.col(j).head(k).sum());

    for (Eigen::Index i = 0; i < k; ++i)
        if (p.x.repeat_mask[static_cast<std::size_t>(i)]) b.values.row(i).setZero();
    for (Eigen::Index j = 0; j < k; ++j)
        if (p.y.repeat_mask[static_cast<std::size_t>(j)]) b.values.col(j).setZero();
    b.values(k, k) = 0.0;
    return b;
}

LossValue fine_loss(const std::vector<ConfidenceMatrix>& conf,
                    const std::vector<FineBinaryMatrix>& binaries) {
    if (conf.size() != binaries.size())
        throw std::invalid_argument("fine_loss: list length mismatch");
    double total = 0.0;
    for (const auto& b : binaries) total += b.values.sum();
    if (total <= 0.0) return {0.0, true};

    double acc = 0.0;
    for (std::size_t l = 0; l < conf.size(); ++l) {
        const auto& s = conf[l].values;
        const auto& b = binaries[l].values;
        if (s.rows() != b.rows() || s.cols() != b.cols())
            throw std::invalid_argument("fine_loss: shape mismatch at patch " + std::to_string(l));
        for (Eigen::Index i = 0; i < b.rows(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j) {
                const double bij = b(i, j);
                if (bij == 0.0) continue;
                acc += bij * clamped_log(s(i, j));
            }
    }
    return {-acc / total, false};
}

double total_loss(const LossValue& lc, const LossValue& lf, double lambda) {
    return lc.value + lambda * lf.value;
}

Eigen::MatrixXd coarse_loss_upstream(const ConfidenceMatrix& conf, const WeightMatrix& w) {
    const double total = w.values.sum();
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(w.values.rows(), w.values.cols());
    if (total <= 0.0) return u;
    for (Eigen::Index i = 0; i < w.values.rows(); ++i)
        for (Eigen::Index j = 0; j < w.values.cols(); ++j) {
            if (w.values(i, j) == 0.0) continue;
            if (conf.values(i, j) < kLogClamp) continue;  // clamped: flat in the score
            u(i, j) = -w.values(i, j) / total;
        }
    return u;
}

Eigen::MatrixXd fine_loss_upstream(const ConfidenceMatrix& conf, const FineBinaryMatrix& b,
                                   double total_binary_mass) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(b.values.rows(), b.values.cols());
    if (total_binary_mass <= 0.0) return u;
    for (Eigen::Index i = 0; i < b.values.rows(); ++i)
        for (Eigen::Index j = 0; j < b.values.cols(); ++j) {
            if (b.values(i, j) == 0.0) continue;
            if (conf.values(i, j) < kLogClamp) continue;
            u(i, j) = -b.values(i, j) / total_binary_mass;
        }
    return u;
}

}  // namespace cfreg
