#include "cfreg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cfreg/cloud_io.hpp"
#include "cfreg/grouping.hpp"
#include "cfreg/metrics.hpp"
#include "cfreg/neighbor_index.hpp"
#include "cfreg/sinkhorn.hpp"
#include "cfreg/voxel.hpp"

namespace cfreg {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[noreturn]] void stage_fail(const std::string& stage, const std::string& msg) {
    throw std::runtime_error(stage + ": " + msg);
}

FeatureSet subset_rows(const FeatureSet& fs, const std::vector<std::size_t>& rows) {
    FeatureSet out;
    out.vectors = Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), fs.vectors.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.vectors.row(static_cast<Eigen::Index>(i)) =
            fs.vectors.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

}  // namespace

RegisterPairReport register_pair(const PipelineConfig& cfg, const PointCloud& raw_x,
                                 const PointCloud& raw_y, const ExternalFeatures* features) {
    cfg.validate();
    if (raw_x.empty() || raw_y.empty()) stage_fail("downsample", "empty input");
    if (features) {
        if (features->src.size() != raw_x.size())
            stage_fail("features", "source feature rows (" + std::to_string(features->src.size()) +
                                       ") do not match cloud size (" +
                                       std::to_string(raw_x.size()) + ")");
        if (features->tgt.size() != raw_y.size())
            stage_fail("features", "target feature rows (" + std::to_string(features->tgt.size()) +
                                       ") do not match cloud size (" +
                                       std::to_string(raw_y.size()) + ")");
    }

    RegisterPairReport rep;

    // Two voxel scales: fine points, then coarse nodes picked from them.
    const VoxelResult fine_x = voxel_downsample(raw_x, cfg.v_f, mix_seed(cfg.seed, 1));
    const VoxelResult fine_y = voxel_downsample(raw_y, cfg.v_f, mix_seed(cfg.seed, 2));
    const VoxelResult nodes_x = voxel_downsample(fine_x.cloud, cfg.v_c, mix_seed(cfg.seed, 3));
    const VoxelResult nodes_y = voxel_downsample(fine_y.cloud, cfg.v_c, mix_seed(cfg.seed, 4));
    rep.fine_x = fine_x.cloud;
    rep.fine_y = fine_y.cloud;
    rep.nodes_x = nodes_x.cloud;
    rep.nodes_y = nodes_y.cloud;

    // Descriptors for points and nodes, either built in or external rows
    // subset through the down-sampling chain.
    FeatureSet feat_px, feat_py, feat_nx, feat_ny;
    if (features) {
        feat_px = subset_rows(features->src, fine_x.kept_indices);
        feat_py = subset_rows(features->tgt, fine_y.kept_indices);
        std::vector<std::size_t> raw_nx, raw_ny;
        for (std::size_t i : nodes_x.kept_indices) raw_nx.push_back(fine_x.kept_indices[i]);
        for (std::size_t i : nodes_y.kept_indices) raw_ny.push_back(fine_y.kept_indices[i]);
        feat_nx = subset_rows(features->src, raw_nx);
        feat_ny = subset_rows(features->tgt, raw_ny);
    } else {
        // Raw clouds as descriptor support: denser neighborhoods, better
        // signal-to-noise than the down-sampled points.
        const NeighborIndex idx_x(raw_x, cfg.point_radius);
        const NeighborIndex idx_y(raw_y, cfg.point_radius);
        feat_px = compute_descriptors(fine_x.cloud, raw_x, idx_x, cfg.point_radius);
        feat_py = compute_descriptors(fine_y.cloud, raw_y, idx_y, cfg.point_radius);
        feat_nx = compute_descriptors(nodes_x.cloud, raw_x, idx_x, cfg.node_radius);
        feat_ny = compute_descriptors(nodes_y.cloud, raw_y, idx_y, cfg.node_radius);
    }

    // Coarse stage: slack-augmented Sinkhorn over node features, thresholded
    // proposal with the minimum-count fallback.
    const ScoreMatrix coarse_scores = assemble_coarse_scores(feat_nx, feat_ny, cfg.z);
    rep.counters.coarse_entries = static_cast<std::size_t>(coarse_scores.values.rows()) *
                                  static_cast<std::size_t>(coarse_scores.values.cols());
    SinkhornOptions sopts;
    sopts.iters = cfg.sinkhorn_iters;
    const ConfidenceMatrix coarse_conf = sinkhorn(coarse_scores, sopts, SinkhornVariant::kCoarse);
    rep.coarse = propose(coarse_conf, cfg.tau_c, cfg.tau_m);

    // Fine stage: expand each coarse pair to truncated patches and refine.
    const NodeAssignment assign_x = assign_points(fine_x.cloud, nodes_x.cloud, mix_seed(cfg.seed, 5));
    const NodeAssignment assign_y = assign_points(fine_y.cloud, nodes_y.cloud, mix_seed(cfg.seed, 6));

    std::vector<PointCorrespondences> per_patch;
    per_patch.reserve(rep.coarse.pairs.size());
    for (std::size_t idx = 0; idx < rep.coarse.pairs.size(); ++idx) {
        const PatchPair patch = build_patch_pair(
            rep.coarse.pairs[idx], assign_x, assign_y, fine_x.cloud, fine_y.cloud, nodes_x.cloud,
            nodes_y.cloud, feat_px, feat_py, cfg.k, mix_seed(cfg.seed, 100 + idx));
        rep.counters.fine_entries += (cfg.k + 1) * (cfg.k + 1);
        per_patch.push_back(refine_patch(patch, cfg.sinkhorn_iters, cfg.tau_f));
    }
    rep.pooled = pool(per_patch);
    rep.sampled = sample(rep.pooled, cfg.samples, mix_seed(cfg.seed, 7));

    RansacOptions ropts;
    ropts.max_iters = cfg.ransac_iters;
    ropts.inlier_tau = cfg.ransac_inlier_tau;
    ropts.seed = mix_seed(cfg.seed, 8);
    rep.refined = ransac(rep.sampled, rep.fine_x, rep.fine_y, ropts);

    // Ablation route: RANSAC directly on the coarse node correspondences.
    if (rep.coarse.pairs.size() >= 3) {
        PointCorrespondences node_pairs;
        for (const auto& cp : rep.coarse.pairs)
            node_pairs.pairs.push_back({cp.i, cp.j, 1.0, cp.confidence, cp.confidence});
        RansacOptions copts = ropts;
        copts.seed = mix_seed(cfg.seed, 9);
        try {
            rep.coarse_only = ransac(node_pairs, rep.nodes_x, rep.nodes_y, copts);
        } catch (const std::runtime_error&) {
            rep.coarse_only.reset();  // defined: the ablation route may fail
        }
    }
    return rep;
}

std::vector<ManifestPair> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    std::vector<ManifestPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        ManifestPair p;
        if (!(ls >> p.src)) continue;  // blank line
        if (!(ls >> p.tgt >> p.gt_pose))
            throw std::runtime_error("manifest: " + path + ": line " + std::to_string(lineno) +
                                     ": expected 'src tgt gt_pose'");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

EvalSummary evaluate(const PipelineConfig& cfg, const std::vector<ManifestPair>& pairs,
                     const std::string& report_jsonl_path, const std::string& summary_json_path,
                     std::vector<PairRecord>* records) {
    std::vector<PairRecord> recs;
    recs.reserve(pairs.size());

    for (const auto& mp : pairs) {
        const PointCloud cx = read_cloud(mp.src);
        const PointCloud cy = read_cloud(mp.tgt);
        const RigidTransform gt = read_pose(mp.gt_pose);

        const RegisterPairReport rep = register_pair(cfg, cx, cy);

        PairRecord rec;
        rec.src_path = mp.src;
        rec.tgt_path = mp.tgt;
        rec.correspondences = rep.sampled.size();
        rec.inliers = rep.refined.inlier_count;
        rec.ir = inlier_ratio(rep.sampled, rep.fine_x, rep.fine_y, gt, kDefaultTau1).value;

        const auto gt_set = gt_correspondences(rep.fine_x, rep.fine_y, gt, kDefaultTau1);
        rec.rmse = rmse(gt_set, rep.fine_x, rep.fine_y, rep.refined.transform);
        rec.registered = rec.rmse < kDefaultTau3;
        rec.coarse_rmse = rep.coarse_only
                              ? rmse(gt_set, rep.fine_x, rep.fine_y, rep.coarse_only->transform)
                              : std::numeric_limits<double>::quiet_NaN();
        const auto [rte, rre] = rte_rre(rep.refined.transform, gt);
        rec.rte = rte;
        rec.rre = rre;
        recs.push_back(std::move(rec));
    }

    EvalSummary summary;
    summary.pairs = recs.size();
    std::vector<double> irs;
    for (const auto& r : recs) {
        irs.push_back(r.ir);
        summary.mean_rte += r.rte;
        summary.mean_rre += r.rre;
        if (r.registered) summary.rr += 1.0;
    }
    if (!recs.empty()) {
        summary.fmr = feature_matching_recall(irs, kDefaultTau2);
        summary.rr /= static_cast<double>(recs.size());
        summary.mean_rte /= static_cast<double>(recs.size());
        summary.mean_rre /= static_cast<double>(recs.size());
        std::vector<double> sorted_ir = irs;
        std::sort(sorted_ir.begin(), sorted_ir.end());
        const std::size_t n = sorted_ir.size();
        summary.median_ir = n % 2 == 1 ? sorted_ir[n / 2]
                                       : 0.5 * (sorted_ir[n / 2 - 1] + sorted_ir[n / 2]);
    }

    if (!report_jsonl_path.empty()) {
        std::ofstream out(report_jsonl_path);
        if (!out) throw std::runtime_error(report_jsonl_path + ": cannot open for writing");
        for (const auto& r : recs) {
            nlohmann::json j{{"src", r.src_path},
                             {"tgt", r.tgt_path},
                             {"ir", r.ir},
                             {"rmse", r.rmse},
                             {"rte", r.rte},
                             {"rre", r.rre},
                             {"registered", r.registered},
                             {"correspondences", r.correspondences},
                             {"inliers", r.inliers}};
            if (std::isfinite(r.coarse_rmse)) j["coarse_rmse"] = r.coarse_rmse;
            out << j.dump() << "\n";
        }
    }
    if (!summary_json_path.empty()) {
        std::ofstream out(summary_json_path);
        if (!out) throw std::runtime_error(summary_json_path + ": cannot open for writing");
        nlohmann::json j{{"fmr", summary.fmr},
                         {"rr", summary.rr},
                         {"mean_rte", summary.mean_rte},
                         {"mean_rre", summary.mean_rre},
                         {"median_ir", summary.median_ir},
                         {"pairs", summary.pairs}};
        out << j.dump(2) << "\n";
    }
    if (records) *records = std::move(recs);
    return summary;
}

}  // namespace cfreg
