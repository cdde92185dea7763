#include "cfreg/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfreg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// logsumexp over the non-muted entries of one row/column slice.
// Returns -inf when everything is muted.
double lse_row(const Eigen::MatrixXd& m, const BoolMatrix& mute, Eigen::Index i) {
    double mx = kNegInf;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (!mute(i, j)) mx = std::max(mx, m(i, j));
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (!mute(i, j)) s += std::exp(m(i, j) - mx);
    return mx + std::log(s);
}

double lse_col(const Eigen::MatrixXd& m, const BoolMatrix& mute, Eigen::Index j) {
    double mx = kNegInf;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (!mute(i, j)) mx = std::max(mx, m(i, j));
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (!mute(i, j)) s += std::exp(m(i, j) - mx);
    return mx + std::log(s);
}

struct Targets {
    // Log target mass for each row / column; NaN marks "not normalized".
    Eigen::VectorXd log_row;
    Eigen::VectorXd log_col;
};

Targets make_targets(Eigen::Index rows, Eigen::Index cols, SinkhornVariant variant) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Targets t;
    t.log_row = Eigen::VectorXd::Zero(rows);
    t.log_col = Eigen::VectorXd::Zero(cols);
    if (variant == SinkhornVariant::kCoarse) {
        t.log_row(rows - 1) = std::log(static_cast<double>(cols - 1));
        t.log_col(cols - 1) = std::log(static_cast<double>(rows - 1));
    } else {
        t.log_row(rows - 1) = nan;  // slack row/column dropped from normalization
        t.log_col(cols - 1) = nan;
    }
    return t;
}

void row_pass(Eigen::MatrixXd& m, const BoolMatrix& mute, const Targets& t) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (std::isnan(t.log_row(i))) continue;
        const double lse = lse_row(m, mute, i);
        if (lse == kNegInf) continue;  // fully muted row stays all-zero
        const double shift = t.log_row(i) - lse;
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (!mute(i, j)) m(i, j) += shift;
    }
}

void col_pass(Eigen::MatrixXd& m, const BoolMatrix& mute, const Targets& t) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (std::isnan(t.log_col(j))) continue;
        const double lse = lse_col(m, mute, j);
        if (lse == kNegInf) continue;
        const double shift = t.log_col(j) - lse;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!mute(i, j)) m(i, j) += shift;
    }
}

Eigen::MatrixXd to_exp(const Eigen::MatrixXd& log_m, const BoolMatrix& mute) {
    Eigen::MatrixXd out(log_m.rows(), log_m.cols());
    for (Eigen::Index i = 0; i < log_m.rows(); ++i)
        for (Eigen::Index j = 0; j < log_m.cols(); ++j)
            out(i, j) = mute(i, j) ? 0.0 : std::exp(log_m(i, j));
    return out;
}

double violation_log_domain(const Eigen::MatrixXd& log_m, const BoolMatrix& mute,
                            SinkhornVariant variant) {
    return max_marginal_violation(to_exp(log_m, mute), mute, variant);
}

void check_input(const ScoreMatrix& s) {
    if (s.values.rows() < 2 || s.values.cols() < 2)
        throw std::invalid_argument("sinkhorn: matrix must be at least 2x2 (interior plus slack)");
    if (s.mute_mask.rows() != s.values.rows() || s.mute_mask.cols() != s.values.cols())
        throw std::invalid_argument("sinkhorn: mute mask shape mismatch");
    for (Eigen::Index i = 0; i < s.values.rows(); ++i)
        for (Eigen::Index j = 0; j < s.values.cols(); ++j)
            if (!s.mute_mask(i, j) && !std::isfinite(s.values(i, j)))
                throw std::invalid_argument("sinkhorn: non-muted score must be finite");
}

}  // namespace

ScoreMatrix assemble_coarse_scores(const FeatureSet& fx, const FeatureSet& fy, double z) {
    if (fx.dim() != fy.dim())
        throw std::invalid_argument("assemble_coarse_scores: feature dimension mismatch (" +
                                    std::to_string(fx.dim()) + " vs " + std::to_string(fy.dim()) +
                                    ")");
    const Eigen::Index n = static_cast<Eigen::Index>(fx.size());
    const Eigen::Index m = static_cast<Eigen::Index>(fy.size());
    ScoreMatrix s;
    s.values = Eigen::MatrixXd::Constant(n + 1, m + 1, z);
    s.values.topLeftCorner(n, m) = fx.vectors * fy.vectors.transpose();
    s.mute_mask = BoolMatrix::Constant(n + 1, m + 1, false);
    return s;
}

double max_marginal_violation(const Eigen::MatrixXd& values, const BoolMatrix& mute_mask,
                              SinkhornVariant variant) {
    const Eigen::Index rows = values.rows(), cols = values.cols();
    const Targets t = make_targets(rows, cols, variant);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (std::isnan(t.log_row(i))) continue;
        bool any = false;
        double sum = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (mute_mask(i, j)) continue;
            any = true;
            sum += values(i, j);
        }
        if (!any) continue;
        worst = std::max(worst, std::abs(sum - std::exp(t.log_row(i))));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (std::isnan(t.log_col(j))) continue;
        bool any = false;
        double sum = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (mute_mask(i, j)) continue;
            any = true;
            sum += values(i, j);
        }
        if (!any) continue;
        worst = std::max(worst, std::abs(sum - std::exp(t.log_col(j))));
    }
    return worst;
}

double max_marginal_violation(const ConfidenceMatrix& conf, const BoolMatrix& mute_mask) {
    return max_marginal_violation(conf.values, mute_mask, conf.variant);
}

ConfidenceMatrix sinkhorn(const ScoreMatrix& s, const SinkhornOptions& opts,
                          SinkhornVariant variant) {
    check_input(s);
    if (opts.iters < 1) throw std::invalid_argument("sinkhorn: iters must be >= 1");

    const Targets t = make_targets(s.values.rows(), s.values.cols(), variant);
    Eigen::MatrixXd m = s.values;
    for (int it = 0; it < opts.iters; ++it) {
        row_pass(m, s.mute_mask, t);
        col_pass(m, s.mute_mask, t);
        if (opts.early_exit || opts.violation_trace) {
            const double v = violation_log_domain(m, s.mute_mask, variant);
            if (opts.violation_trace) opts.violation_trace->push_back(v);
            if (opts.early_exit && v < opts.tol) break;
        }
    }
    ConfidenceMatrix out;
    out.values = to_exp(m, s.mute_mask);
    out.variant = variant;
    return out;
}

ConfidenceMatrix sinkhorn(const ScoreMatrix& s, int iters, SinkhornVariant variant) {
    SinkhornOptions opts;
    opts.iters = iters;
    return sinkhorn(s, opts, variant);
}

Eigen::MatrixXd sinkhorn_grad(const ScoreMatrix& s, int iters, SinkhornVariant variant,
                              const Eigen::MatrixXd& upstream) {
    check_input(s);
    if (iters < 1) throw std::invalid_argument("sinkhorn_grad: iters must be >= 1");
    if (upstream.rows() != s.values.rows() || upstream.cols() != s.values.cols())
        throw std::invalid_argument("sinkhorn_grad: upstream shape mismatch");

    const Targets t = make_targets(s.values.rows(), s.values.cols(), variant);
    const BoolMatrix& mute = s.mute_mask;

    // Forward, recording the matrix before every pass (row pass then col pass
    // per iteration, exactly `iters` iterations, no early exit).
    std::vector<Eigen::MatrixXd> pre_pass;
    pre_pass.reserve(static_cast<std::size_t>(iters) * 2);
    Eigen::MatrixXd m = s.values;
    for (int it = 0; it < iters; ++it) {
        pre_pass.push_back(m);
        row_pass(m, mute, t);
        pre_pass.push_back(m);
        col_pass(m, mute, t);
    }

    // Backward: log(confidence) is the final log matrix, so the seed gradient
    // is the upstream itself (zero at muted entries).
    Eigen::MatrixXd g = upstream;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            if (mute(i, j)) g(i, j) = 0.0;

    for (std::size_t k = pre_pass.size(); k-- > 0;) {
        const Eigen::MatrixXd& in = pre_pass[k];
        const bool is_row_pass = (k % 2 == 0);
        if (is_row_pass) {
            for (Eigen::Index i = 0; i < in.rows(); ++i) {
                if (std::isnan(t.log_row(i))) continue;
                const double lse = lse_row(in, mute, i);
                if (lse == kNegInf) continue;
                double gsum = 0.0;
                for (Eigen::Index j = 0; j < in.cols(); ++j)
                    if (!mute(i, j)) gsum += g(i, j);
                for (Eigen::Index j = 0; j < in.cols(); ++j)
                    if (!mute(i, j)) g(i, j) -= std::exp(in(i, j) - lse) * gsum;
            }
        } else {
            for (Eigen::Index j = 0; j < in.cols(); ++j) {
                if (std::isnan(t.log_col(j))) continue;
                const double lse = lse_col(in, mute, j);
                if (lse == kNegInf) continue;
                double gsum = 0.0;
                for (Eigen::Index i = 0; i < in.rows(); ++i)
                    if (!mute(i, j)) gsum += g(i, j);
                for (Eigen::Index i = 0; i < in.rows(); ++i)
                    if (!mute(i, j)) g(i, j) -= std::exp(in(i, j) - lse) * gsum;
            }
        }
    }
    return g;
}

}  // namespace cfreg
