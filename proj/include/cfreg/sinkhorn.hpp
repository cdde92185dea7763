#pragma once

#include <Eigen/Core>
#include <vector>

#include "cfreg/features.hpp"

namespace cfreg {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Which normalization scheme the solver runs.
///  kCoarse: alternating row/column normalization over the full augmented
///           matrix; interior rows/columns have target mass 1, the slack
///           row/column absorb the remainder (targets = interior column /
///           row count).
///  kFine:   row normalization over the first r rows only and column
///           normalization over the first c columns only; the slack row and
///           column are dropped from their own normalization.
enum class SinkhornVariant { kCoarse, kFine };

/// Log-domain scores of shape (r+1) x (c+1); the last row/column are the
/// slack entries. Muted positions conceptually hold -inf (exp = 0) and are
/// carried in the mask, never as sentinel floats.
struct ScoreMatrix {
    Eigen::MatrixXd values;
    BoolMatrix mute_mask;

    Eigen::Index interior_rows() const { return values.rows() - 1; }
    Eigen::Index interior_cols() const { return values.cols() - 1; }
};

/// Exp-domain Sinkhorn output. Muted positions are exactly 0.
struct ConfidenceMatrix {
    Eigen::MatrixXd values;
    SinkhornVariant variant = SinkhornVariant::kCoarse;

    Eigen::Index interior_rows() const { return values.rows() - 1; }
    Eigen::Index interior_cols() const { return values.cols() - 1; }
};

struct SinkhornOptions {
    int iters = 100;
    bool early_exit = true;            // stop once violation < tol
    double tol = 1e-9;
    std::vector<double>* violation_trace = nullptr;  // per-iteration violation, optional
};

/// (n'+1) x (m'+1) score matrix from node features: interior entries are
/// inner products, the entire slack row/column and corner hold z, nothing
/// is muted. Throws on feature dimension mismatch.
ScoreMatrix assemble_coarse_scores(const FeatureSet& fx, const FeatureSet& fy, double z);

ConfidenceMatrix sinkhorn(const ScoreMatrix& s, const SinkhornOptions& opts,
                          SinkhornVariant variant);
ConfidenceMatrix sinkhorn(const ScoreMatrix& s, int iters, SinkhornVariant variant);

/// Max absolute marginal violation of an exp-domain matrix under the
/// variant's targets. Fully-muted rows/columns are skipped (defined zero).
double max_marginal_violation(const Eigen::MatrixXd& values, const BoolMatrix& mute_mask,
                              SinkhornVariant variant);
double max_marginal_violation(const ConfidenceMatrix& conf, const BoolMatrix& mute_mask);

/// Gradient of <upstream, log(confidence)> with respect to the non-muted
/// score entries, obtained by unrolling exactly `iters` normalization
/// iterations (no early exit). Muted entries get gradient 0.
Eigen::MatrixXd sinkhorn_grad(const ScoreMatrix& s, int iters, SinkhornVariant variant,
                              const Eigen::MatrixXd& upstream);

}  // namespace cfreg
