#pragma once

#include <span>
#include <utility>
#include <vector>

#include "polarkit/geometry.hpp"

namespace polarkit {

inline constexpr double kProbEpsilon = 1e-7;

double smooth_l1(double x, double delta = 1.0);
double bce(double p, double y);
double focal(double p, double y, double alpha = 0.25, double gamma = 2.0);

/// LPM head output for one pole.
struct PolePrediction {
    double theta = 0.0;
    double radius = 0.0;
    double score = 0.0;
};

struct LpmLoss {
    double cls = 0.0;
    double reg = 0.0;
};

/// cls: BCE over every pole (mean, or sum with mean_cls = false).
/// reg: smooth-L1 on theta and r over poles with r_hat < lambda_l, divided by their count.
LpmLoss lpm_loss(std::span<const PolePrediction> pred, const PoleGridLabels& labels, double lambda_l,
                 bool mean_cls = true);

/// Mean pairwise hinge max(0, margin - (pos - neg)); 0 if either side is empty.
double rank_loss(std::span<const double> pos_scores, std::span<const double> neg_scores, double margin = 0.1);

/// 1 - GLaneIoU with g = 1.
double giou_loss(const LaneGrid& pred, const LaneGrid& gt, double w_base);

struct LaneEnds {
    double y_start = 0.0;
    double y_end = 0.0;
};

double endpoint_loss(const LaneEnds& pred, const LaneEnds& gt, double image_height);

struct SegmentParam {
    double theta = 0.0;
    double radius = 0.0;
};

/// Split the valid rows into M equal blocks and return each block's chord in polar form
/// against `pole` (the global pole by convention).
std::vector<SegmentParam> segment_params(const LaneGrid& lane, std::size_t segments, const Pole& pole);

struct SegmentOffset {
    double d_theta = 0.0;
    double d_radius = 0.0;
};

double aux_loss(const PolarAnchor& anchor, std::span<const SegmentOffset> offsets,
                std::span<const SegmentParam> gt_segments, double image_height);

struct LossWeights {
    double w_cls_o2m = 1.0;
    double w_cls_o2o = 1.0;
    double w_rank = 0.7;
    double w_giou_o2m = 1.0;
    double w_end_o2m = 1.0;
    double w_aux = 0.2;
};

struct LossComponents {
    double lpm_cls = 0.0;
    double lpm_reg = 0.0;
    double cls_o2m = 0.0;
    double cls_o2o = 0.0;
    double rank = 0.0;
    double giou_o2m = 0.0;
    double end_o2m = 0.0;
    double aux = 0.0;
};

struct GpmLoss {
    double cls = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

GpmLoss gpm_losses(const LossComponents& c, const LossWeights& w);

}  // namespace polarkit
