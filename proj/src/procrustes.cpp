#include "cfreg/procrustes.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace cfreg {

RigidTransform procrustes(const std::vector<Eigen::Vector3d>& x,
                          const std::vector<Eigen::Vector3d>& y,
                          const std::vector<double>& weights) {
    if (x.size() != y.size() || x.size() != weights.size())
        throw std::invalid_argument("procrustes: size mismatch");

    double total = 0.0;
    std::size_t effective = 0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("procrustes: negative weight");
        if (w > 0.0) {
            total += w;
            ++effective;
        }
    }
    if (effective < 3 || total <= 0.0)
        throw std::runtime_error("procrustes: needs >= 3 pairs with positive weight");

    Eigen::Vector3d cx = Eigen::Vector3d::Zero(), cy = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        cx += weights[i] * x[i];
        cy += weights[i] * y[i];
    }
    cx /= total;
    cy /= total;

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i)
        h += weights[i] * (x[i] - cx) * (y[i] - cy).transpose();
    h /= total;

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    // Rank < 2 leaves a rotation around the dominant axis undetermined.
    if (sv(1) <= 1e-12 * std::max(sv(0), 1e-300))
        throw std::runtime_error("procrustes: degenerate (collinear) correspondence geometry");

    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
    return {r, cy - r * cx};
}

RigidTransform procrustes(const std::vector<Eigen::Vector3d>& x,
                          const std::vector<Eigen::Vector3d>& y) {
    return procrustes(x, y, std::vector<double>(x.size(), 1.0));
}

}  // namespace cfreg
