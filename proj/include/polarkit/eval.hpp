#pragma once

#include <span>
#include <utility>
#include <vector>

#include "polarkit/geometry.hpp"

namespace polarkit {

struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> tp;  // (pred, gt)
    std::vector<std::size_t> fp;                          // unmatched preds
    std::vector<std::size_t> fn;                          // unmatched gts
};

/// Injective matching over pairs with g = 0 IoU >= threshold: most pairs first, then
/// the largest total IoU.
MatchResult match_lanes(std::span<const LaneGrid> preds, std::span<const LaneGrid> gts, double iou_threshold,
                        double w_base = 15.0);

struct ThresholdMetrics {
    double threshold = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const ThresholdMetrics&) const = default;
};

/// Fills precision, recall and f1 from the counts (each 0 when its denominator is 0).
ThresholdMetrics metrics_from_counts(double threshold, std::size_t tp, std::size_t fp, std::size_t fn);

struct MetricsReport {
    std::vector<ThresholdMetrics> per_threshold;
    double mf1 = 0.0;

    /// Entry for `threshold` (exact match), or nullptr.
    const ThresholdMetrics* at(double threshold) const;
    bool operator==(const MetricsReport&) const = default;
};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> standard_iou_thresholds();

/// Mean of the F1 values at the ten standard thresholds.
double mean_f1(std::span<const ThresholdMetrics> per_threshold);

struct ScenePair {
    std::vector<LaneGrid> preds;
    std::vector<LaneGrid> gts;
};

/// Counts are pooled over all scenes before computing each threshold's F1.
MetricsReport f1_suite(std::span<const ScenePair> scenes, std::span<const double> thresholds, double w_base = 15.0);

struct TuSimpleReport {
    double accuracy = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
};

inline constexpr double kTuSimplePixelTolerance = 20.0;
inline constexpr double kTuSimpleLaneAccuracy = 0.85;

/// Point accuracy within 20 px over gt rows; a gt lane counts as detected when its
/// matched prediction gets more than 85% of its points right.
TuSimpleReport tusimple_metrics(std::span<const ScenePair> scenes);

}  // namespace polarkit
