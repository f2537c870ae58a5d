#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polarkit/eval.hpp"
#include "polarkit/geometry.hpp"
#include "polarkit/o2o_head.hpp"
#include "polarkit/suppression.hpp"

namespace polarkit {

enum class SceneKind { sparse, dense };

struct SceneSpec {
    ImageFrame frame;
    SceneKind kind = SceneKind::sparse;
    std::size_t lane_count = 4;
    double curvature_min = 0.0;   // px of mid-lane bow
    double curvature_max = 40.0;
    double top_fraction = 0.45;   // lanes start at this fraction of the height (image y)
    double branch_fraction = 0.4; // fork: share the bottom 40% of the lane length
    double fork_separation = 70.0;
    double double_lane_separation = 22.0;
    double w_base = 15.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Sparse scenes keep every pair's g = 0 IoU below 0.1. Dense scenes contain one fork
/// (two lanes identical below the branch row) and one double lane (a twin closer than
/// 2 * w_base); lane_count counts both members of each pair.
std::vector<LaneGrid> gen_scene(const SceneSpec& spec);

struct CandidateGenSpec {
    std::size_t per_gt = 4;
    double sigma_theta = 0.01;  // rad
    double sigma_r = 4.0;       // px
    double sigma_x = 7.0;       // px
    double sigma_s = 25.0;      // px, score falloff
    double score_noise = 0.03;
    std::size_t background = 6;
    double background_cap = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Perturbed copies of every gt lane plus low-score background lanes. Values are
/// quantized to the file format's precision so candidates survive a JSON round trip.
CandidateSet gen_candidates(const std::vector<LaneGrid>& gts, const CandidateGenSpec& spec, const Pole& global_pole);

/// Stand-in for a trained one-to-one head: 1 for the best-IoU candidate of each gt, 0 elsewhere.
std::vector<double> oracle_o2o_scores(const CandidateSet& candidates, const std::vector<LaneGrid>& gts,
                                      double w_base);

/// Seeded sinusoidal feature maps sampled along each candidate's anchor.
HeadInput synthetic_head_input(const CandidateSet& candidates, std::size_t channels, std::uint64_t seed);

enum class ModeKind { sequential, fast_geometric, dual_confidence };
enum class ScoreRegime { oracle, random_head };

struct ModeSpec {
    std::string label;
    ModeKind kind = ModeKind::sequential;
    double w_base = 15.0;  // distance-function semi-width for the NMS paths
};

/// sequential@15 and sequential@50: the small and large pixel presets.
ModeSpec sequential_preset(double pixels);

struct PipelineConfig {
    SceneSpec scene;
    std::size_t scene_count = 10;
    CandidateGenSpec candidates;
    std::vector<ModeSpec> modes;
    SuppressionThresholds thresholds;
    ScoreRegime regime = ScoreRegime::oracle;
    HeadDims head;
    std::uint64_t head_seed = 7;
    double eval_w_base = 15.0;
    std::vector<double> eval_thresholds = standard_iou_thresholds();
    std::uint64_t seed = 0;
};

struct ModeResult {
    ModeSpec mode;
    MetricsReport metrics;
    std::vector<std::vector<std::size_t>> selections;  // per scene
};

struct SceneData {
    std::vector<LaneGrid> gts;
    CandidateSet candidates;
    std::uint64_t candidate_hash = 0;
};

struct PipelineResult {
    std::vector<SceneData> scenes;
    std::vector<ModeResult> modes;
    double wall_seconds = 0.0;
};

/// Per-scene seeds are derived from cfg.seed so the whole run depends only on (seed, config).
SceneSpec scene_spec_for(const PipelineConfig& cfg, std::size_t scene_index);
CandidateGenSpec candidate_spec_for(const PipelineConfig& cfg, std::size_t scene_index);

PipelineResult run_pipeline(const PipelineConfig& cfg);

std::uint64_t hash_candidates(const CandidateSet& candidates);

struct BenchRow {
    std::string mode;
    std::size_t k = 0;
    double median_seconds = 0.0;
    std::size_t selected = 0;
};

/// Median wall time per (mode, K) over random candidate sets; post-processing only.
std::vector<BenchRow> bench_suppression(const std::vector<std::size_t>& ks, std::size_t repetitions,
                                        std::uint64_t seed);

/// R^2 of the least-squares fit y = a + b x + c x^2.
double quadratic_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

/// Deterministic random candidate set used by the benchmark and the equivalence checks.
CandidateSet random_candidates(std::size_t k, const ImageFrame& frame, std::uint64_t seed);

}  // namespace polarkit
