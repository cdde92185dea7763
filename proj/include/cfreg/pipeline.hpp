#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfreg/coarse_match.hpp"
#include "cfreg/config.hpp"
#include "cfreg/features.hpp"
#include "cfreg/fine_match.hpp"
#include "cfreg/ransac.hpp"
#include "cfreg/types.hpp"

namespace cfreg {

/// Externally computed per-point features, row-aligned with the raw input
/// clouds; the pipeline subsets them for the down-sampled points and nodes.
struct ExternalFeatures {
    FeatureSet src;
    FeatureSet tgt;
};

/// Score-matrix entries evaluated by the matcher. The coarse-to-fine search
/// touches far fewer entries than the n*m dense alternative.
struct MatchingCounters {
    std::size_t coarse_entries = 0;
    std::size_t fine_entries = 0;
};

struct RegisterPairReport {
    PointCloud fine_x, fine_y;    // clouds the correspondences index into
    PointCloud nodes_x, nodes_y;
    CoarseCorrespondences coarse;
    PointCorrespondences pooled;   // union over all refined patches
    PointCorrespondences sampled;  // confidence-weighted subset fed to RANSAC
    RegistrationResult refined;    // pose from refined point correspondences
    std::optional<RegistrationResult> coarse_only;  // pose from node pairs alone
    MatchingCounters counters;
};

/// Full pipeline: down-sample, describe, coarse Sinkhorn + proposal, group,
/// refine, pool, sample, RANSAC. Deterministic per cfg.seed. Errors carry
/// the failing stage name ("downsample: empty input", ...).
RegisterPairReport register_pair(const PipelineConfig& cfg, const PointCloud& raw_x,
                                 const PointCloud& raw_y,
                                 const ExternalFeatures* features = nullptr);

struct PairRecord {
    std::string src_path, tgt_path;
    double ir = 0.0;
    double rmse = 0.0;
    double coarse_rmse = 0.0;
    double rte = 0.0;
    double rre = 0.0;
    bool registered = false;
    std::size_t correspondences = 0;
    std::size_t inliers = 0;
};

struct EvalSummary {
    double fmr = 0.0;
    double rr = 0.0;
    double mean_rte = 0.0;
    double mean_rre = 0.0;
    double median_ir = 0.0;
    std::size_t pairs = 0;
};

struct ManifestPair {
    std::string src, tgt, gt_pose;
};

/// One "src tgt gt_pose" line per pair; '#' comments allowed.
std::vector<ManifestPair> read_manifest(const std::string& path);

/// Registers and scores every manifest pair; writes one JSON object per pair
/// to `report_jsonl_path` and the dataset summary to `summary_json_path`
/// (either may be empty to skip the file). Output is byte-stable for a fixed
/// manifest and seed.
EvalSummary evaluate(const PipelineConfig& cfg, const std::vector<ManifestPair>& pairs,
                     const std::string& report_jsonl_path, const std::string& summary_json_path,
                     std::vector<PairRecord>* records = nullptr);

}  // namespace cfreg
