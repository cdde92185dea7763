#include "cfreg/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cfreg {

namespace {

constexpr int kAngleBins = 8;

// Sort neighbor coordinates lexicographically before accumulating so the
// descriptor is bit-identical under input permutation.
void sorted_neighborhood(const PointCloud& support, const std::vector<std::size_t>& idx,
                         std::vector<Eigen::Vector3d>& out) {
    out.clear();
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(support.points[i]);
    std::sort(out.begin(), out.end(), [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
        if (a.x() != b.x()) return a.x() < b.x();
        if (a.y() != b.y()) return a.y() < b.y();
        return a.z() < b.z();
    });
}

}  // namespace

FeatureSet compute_descriptors(const PointCloud& targets, const PointCloud& support,
                               const NeighborIndex& support_index, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("compute_descriptors: radius must be > 0");

    const std::size_t n = targets.size();
    std::vector<std::vector<std::size_t>> neighborhoods(n);
    std::size_t max_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        neighborhoods[i] = support_index.radius_query(targets.points[i], radius);
        max_count = std::max(max_count, neighborhoods[i].size());
    }

    FeatureSet fs;
    fs.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), kDescriptorDim);

    std::vector<Eigen::Vector3d> nbrs;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& q = targets.points[i];
        if (neighborhoods[i].size() < 3) continue;  // degenerate: zero row
        sorted_neighborhood(support, neighborhoods[i], nbrs);

        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (const auto& p : nbrs) centroid += p;
        centroid /= static_cast<double>(nbrs.size());

        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto& p : nbrs) {
            const Eigen::Vector3d d = p - centroid;
            cov += d * d.transpose();
        }
        cov /= static_cast<double>(nbrs.size());

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        // Ascending from Eigen; reorder descending l1 >= l2 >= l3.
        const double l1 = std::max(eig.eigenvalues()(2), 0.0);
        const double l2 = std::max(eig.eigenvalues()(1), 0.0);
        const double l3 = std::max(eig.eigenvalues()(0), 0.0);

        Eigen::VectorXd d = Eigen::VectorXd::Zero(kDescriptorDim);
        const double lsum = l1 + l2 + l3;
        if (l1 > 0.0 && lsum > 0.0) {
            d(0) = 0.5 * (l1 - l2) / l1;  // linearity
            d(1) = 0.5 * (l2 - l3) / l1;  // planarity
            d(2) = 0.5 * l3 / l1;         // sphericity
            d(3) = 0.5 * std::cbrt((l1 / lsum) * (l2 / lsum) * (l3 / lsum));  // omnivariance
        }

        const Eigen::Vector3d to_centroid = centroid - q;
        const double cn = to_centroid.norm();
        if (cn > 1e-12) {
            const Eigen::Vector3d dir = to_centroid / cn;
            double used = 0.0;
            Eigen::VectorXd hist = Eigen::VectorXd::Zero(kAngleBins);
            for (const auto& p : nbrs) {
                const Eigen::Vector3d off = p - q;
                const double on = off.norm();
                if (on <= 1e-12) continue;  // the point itself
                double cosang = off.dot(dir) / on;
                cosang = std::clamp(cosang, -1.0, 1.0);
                const double ang = std::acos(cosang);  // [0, pi]
                int bin = static_cast<int>(ang / std::numbers::pi * kAngleBins);
                bin = std::clamp(bin, 0, kAngleBins - 1);
                hist(bin) += 1.0;
                used += 1.0;
            }
            // For near-symmetric neighborhoods the centroid direction is
            // sampling noise; fade the angular block out so such points
            // collapse to identical descriptors instead of decorrelating.
            const double stability = std::min(1.0, cn / (0.1 * radius));
            if (used > 0.0) {
                // Zero-sum encoding: deviations from the uniform bin mass.
                // Kills the bell-shaped common mode that otherwise makes all
                // angular signatures look alike to the inner product.
                Eigen::VectorXd centered =
                    hist / used - Eigen::VectorXd::Constant(kAngleBins, 1.0 / kAngleBins);
                d.segment(4, kAngleBins) = 6.0 * stability * centered;
            }
        }

        d(12) = 0.5 * static_cast<double>(nbrs.size()) / static_cast<double>(max_count);

        const double norm = d.norm();
        if (norm > 0.0) fs.vectors.row(static_cast<Eigen::Index>(i)) = (d / norm).transpose();
    }
    return fs;
}

FeatureSet compute_descriptors(const PointCloud& cloud, const NeighborIndex& index, double radius) {
    return compute_descriptors(cloud, cloud, index, radius);
}

FeatureSet load_features(const std::string& path, std::size_t expected_rows) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::vector<double> vals;
        std::string tok;
        while (ls >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                throw std::runtime_error(path + ": unparsable entry '" + tok + "' at row " +
                                         std::to_string(lineno));
            vals.push_back(v);
        }
        if (vals.empty()) continue;
        if (!rows.empty() && vals.size() != rows.front().size())
            throw std::runtime_error(path + ": row " + std::to_string(lineno) +
                                     " has inconsistent dimension");
        for (double x : vals)
            if (!std::isfinite(x))
                throw std::runtime_error(path + ": non-finite entry at row " +
                                         std::to_string(lineno));
        rows.push_back(std::move(vals));
    }
    if (rows.size() != expected_rows)
        throw std::runtime_error(path + ": expected " + std::to_string(expected_rows) +
                                 " feature rows, found " + std::to_string(rows.size()));

    FeatureSet fs;
    const Eigen::Index dim = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
    fs.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::RowVectorXd r(dim);
        for (Eigen::Index j = 0; j < dim; ++j) r(j) = rows[i][static_cast<std::size_t>(j)];
        const double norm = r.norm();
        if (norm > 0.0) r /= norm;
        fs.vectors.row(static_cast<Eigen::Index>(i)) = r;
    }
    return fs;
}

}  // namespace cfreg
