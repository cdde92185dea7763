#include "cfreg/fine_match.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cfreg {

namespace {

void sort_by_global(std::vector<PointPair>& pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const PointPair& a, const PointPair& b) {
        if (a.c_global != b.c_global) return a.c_global > b.c_global;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
}

// Fenwick tree over weights for O(log n) weighted draws without replacement.
class WeightedSampler {
public:
    explicit WeightedSampler(const std::vector<double>& weights)
        : n_(weights.size()), tree_(weights.size() + 1, 0.0), weight_(weights) {
        for (std::size_t i = 0; i < n_; ++i) add(i, weights[i]);
    }

    double total() const {
        double t = 0.0;
        for (std::size_t i = n_; i > 0; i -= i & (~i + 1)) t += tree_[i];
        return t;
    }

    // Smallest index whose prefix sum exceeds u.
    std::size_t find(double u) const {
        std::size_t pos = 0;
        std::size_t mask = 1;
        while ((mask << 1) <= n_) mask <<= 1;
        for (; mask > 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next <= n_ && tree_[next] <= u) {
                pos = next;
                u -= tree_[next];
            }
        }
        return pos;  // 0-based index of the selected element
    }

    void remove(std::size_t i) {
        add(i, -weight_[i]);
        weight_[i] = 0.0;
    }

private:
    void add(std::size_t i, double delta) {
        for (std::size_t p = i + 1; p <= n_; p += p & (~p + 1)) tree_[p] += delta;
    }

    std::size_t n_;
    std::vector<double> tree_;
    std::vector<double> weight_;
};

}  // namespace

ScoreMatrix assemble_fine_scores(const PatchPair& p) {
    const Eigen::Index k = static_cast<Eigen::Index>(p.x.indices.size());
    if (p.y.indices.size() != static_cast<std::size_t>(k))
        throw std::invalid_argument("assemble_fine_scores: patch sides must share k");
    if (p.x.features.cols() != p.y.features.cols())
        throw std::invalid_argument("assemble_fine_scores: feature dimension mismatch");

    ScoreMatrix s;
    s.values = Eigen::MatrixXd::Zero(k + 1, k + 1);  // slack entries start at 0
    s.values.topLeftCorner(k, k) = p.x.features * p.y.features.transpose();
    s.mute_mask = BoolMatrix::Constant(k + 1, k + 1, false);
    for (Eigen::Index i = 0; i < k; ++i)
        if (p.x.repeat_mask[static_cast<std::size_t>(i)]) s.mute_mask.row(i) = true;
    for (Eigen::Index j = 0; j < k; ++j)
        if (p.y.repeat_mask[static_cast<std::size_t>(j)]) s.mute_mask.col(j) = true;
    s.mute_mask(k, k) = true;  // slack corner
    return s;
}

PointCorrespondences refine_patch(const PatchPair& p, int iters, double tau_f) {
    const ScoreMatrix s = assemble_fine_scores(p);
    const Eigen::Index k = s.interior_rows();

    // Muted rows/columns stay exactly zero through normalization, so solving
    // on the compacted real-slot submatrix (plus slack) is equivalent and
    // much cheaper when most slots are repeats.
    std::vector<Eigen::Index> rows, cols;
    for (Eigen::Index i = 0; i < k; ++i)
        if (!p.x.repeat_mask[static_cast<std::size_t>(i)]) rows.push_back(i);
    for (Eigen::Index j = 0; j < k; ++j)
        if (!p.y.repeat_mask[static_cast<std::size_t>(j)]) cols.push_back(j);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k + 1, k + 1);
    if (!rows.empty() && !cols.empty()) {
        const Eigen::Index rr = static_cast<Eigen::Index>(rows.size());
        const Eigen::Index cc = static_cast<Eigen::Index>(cols.size());
        ScoreMatrix sub;
        sub.values = Eigen::MatrixXd::Zero(rr + 1, cc + 1);
        for (Eigen::Index a = 0; a < rr; ++a)
            for (Eigen::Index b = 0; b < cc; ++b) sub.values(a, b) = s.values(rows[a], cols[b]);
        for (Eigen::Index a = 0; a < rr; ++a) sub.values(a, cc) = s.values(rows[a], k);
        for (Eigen::Index b = 0; b < cc; ++b) sub.values(rr, b) = s.values(k, cols[b]);
        sub.mute_mask = BoolMatrix::Constant(rr + 1, cc + 1, false);
        sub.mute_mask(rr, cc) = true;  // slack corner

        const ConfidenceMatrix sub_conf = sinkhorn(sub, iters, SinkhornVariant::kFine);
        for (Eigen::Index a = 0; a < rr; ++a)
            for (Eigen::Index b = 0; b < cc; ++b) m(rows[a], cols[b]) = sub_conf.values(a, b);
        for (Eigen::Index a = 0; a < rr; ++a) m(rows[a], k) = sub_conf.values(a, cc);
        for (Eigen::Index b = 0; b < cc; ++b) m(k, cols[b]) = sub_conf.values(rr, b);
    }

    // Argmax over the interior of every row and column; slack never competes
    // directly, tau_f rejects rows/columns whose interior mass is all weak.
    std::vector<Eigen::Index> row_arg(static_cast<std::size_t>(k), -1);
    std::vector<Eigen::Index> col_arg(static_cast<std::size_t>(k), -1);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (p.x.repeat_mask[static_cast<std::size_t>(i)]) continue;
        double best = -1.0;
        for (Eigen::Index j = 0; j < k; ++j)
            if (!s.mute_mask(i, j) && m(i, j) > best) {
                best = m(i, j);
                row_arg[static_cast<std::size_t>(i)] = j;
            }
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        if (p.y.repeat_mask[static_cast<std::size_t>(j)]) continue;
        double best = -1.0;
        for (Eigen::Index i = 0; i < k; ++i)
            if (!s.mute_mask(i, j) && m(i, j) > best) {
                best = m(i, j);
                col_arg[static_cast<std::size_t>(j)] = i;
            }
    }

    PointCorrespondences out;
    auto consider = [&](Eigen::Index i, Eigen::Index j) {
        if (s.mute_mask(i, j)) return;
        if (!(m(i, j) > tau_f)) return;
        const std::size_t pi = p.x.indices[static_cast<std::size_t>(i)];
        const std::size_t pj = p.y.indices[static_cast<std::size_t>(j)];
        for (const auto& existing : out.pairs)
            if (existing.i == pi && existing.j == pj) return;
        const double c_fine = m(i, j);
        out.pairs.push_back({pi, pj, c_fine, p.c_coarse, c_fine * p.c_coarse});
    };
    for (Eigen::Index i = 0; i < k; ++i)
        if (row_arg[static_cast<std::size_t>(i)] >= 0) consider(i, row_arg[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < k; ++j)
        if (col_arg[static_cast<std::size_t>(j)] >= 0) consider(col_arg[static_cast<std::size_t>(j)], j);

    sort_by_global(out.pairs);
    return out;
}

PointCorrespondences pool(const std::vector<PointCorrespondences>& lists) {
    std::map<std::pair<std::size_t, std::size_t>, PointPair> best;
    for (const auto& list : lists)
        for (const auto& pair : list.pairs) {
            const auto key = std::make_pair(pair.i, pair.j);
            auto it = best.find(key);
            if (it == best.end() || pair.c_global > it->second.c_global) best[key] = pair;
        }
    PointCorrespondences out;
    out.pairs.reserve(best.size());
    for (const auto& [key, pair] : best) out.pairs.push_back(pair);
    sort_by_global(out.pairs);
    return out;
}

PointCorrespondences sample(const PointCorrespondences& c, std::size_t n, std::uint64_t seed) {
    if (n >= c.size()) return c;
    PointCorrespondences out;
    if (n == 0) return out;

    std::vector<double> weights;
    weights.reserve(c.size());
    for (const auto& pair : c.pairs) weights.push_back(pair.c_global);

    WeightedSampler sampler(weights);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double total = sampler.total();
        if (total <= 0.0) break;
        const std::size_t idx = sampler.find(unif(rng) * total);
        chosen.push_back(idx);
        sampler.remove(idx);
    }
    std::sort(chosen.begin(), chosen.end());  // keep pool ordering
    out.pairs.reserve(chosen.size());
    for (std::size_t idx : chosen) out.pairs.push_back(c.pairs[idx]);
    return out;
}

void write_correspondences_jsonl(const std::string& path, const PointCorrespondences& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    for (const auto& pair : c.pairs) {
        nlohmann::json j{{"src", pair.i},
                         {"tgt", pair.j},
                         {"c_fine", pair.c_fine},
                         {"c_coarse", pair.c_coarse},
                         {"c_global", pair.c_global}};
        out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace cfreg
