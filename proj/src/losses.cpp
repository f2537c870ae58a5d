#include "polarkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polarkit/errors.hpp"
#include "polarkit/laneiou.hpp"

namespace polarkit {

namespace {

// Each log argument is floored at epsilon, so an exact 0/1 prediction that matches its
// label still costs exactly zero.
double safe_log(double v) { return std::log(std::max(v, kProbEpsilon)); }

}  // namespace

double smooth_l1(double x, double delta) {
    const double a = std::abs(x);
    return a < delta ? 0.5 * a * a / delta : a - 0.5 * delta;
}

double bce(double p, double y) {
    p = std::clamp(p, 0.0, 1.0);
    double loss = 0.0;
    if (y > 0.0) loss -= y * safe_log(p);
    if (y < 1.0) loss -= (1.0 - y) * safe_log(1.0 - p);
    return loss;
}

double focal(double p, double y, double alpha, double gamma) {
    p = std::clamp(p, 0.0, 1.0);
    double loss = 0.0;
    if (y > 0.0) loss -= y * alpha * std::pow(1.0 - p, gamma) * safe_log(p);
    if (y < 1.0) loss -= (1.0 - y) * (1.0 - alpha) * std::pow(p, gamma) * safe_log(1.0 - p);
    return loss;
}

LpmLoss lpm_loss(std::span<const PolePrediction> pred, const PoleGridLabels& labels, double lambda_l, bool mean_cls) {
    if (pred.size() != labels.size()) throw ShapeError("prediction count does not match the pole grid");
    LpmLoss out;
    if (pred.empty()) return out;
    std::size_t n_pos = 0;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        out.cls += bce(pred[j].score, labels.s_hat[j]);
        if (labels.r_hat[j] < lambda_l) {
            ++n_pos;
            out.reg += smooth_l1(pred[j].theta - labels.theta_hat[j]) + smooth_l1(pred[j].radius - labels.r_hat[j]);
        }
    }
    if (mean_cls) out.cls /= static_cast<double>(pred.size());
    out.reg = n_pos > 0 ? out.reg / static_cast<double>(n_pos) : 0.0;
    return out;
}

double rank_loss(std::span<const double> pos_scores, std::span<const double> neg_scores, double margin) {
    if (pos_scores.empty() || neg_scores.empty()) return 0.0;
    double sum = 0.0;
    for (double p : pos_scores)
        for (double n : neg_scores) sum += std::max(0.0, margin - (p - n));
    return sum / static_cast<double>(pos_scores.size() * neg_scores.size());
}

double giou_loss(const LaneGrid& pred, const LaneGrid& gt, double w_base) {
    return 1.0 - glane_iou(pred, gt, GIoUParams{1.0, w_base});
}

double endpoint_loss(const LaneEnds& pred, const LaneEnds& gt, double image_height) {
    if (!(image_height > 0.0)) throw InvalidInput("image height must be positive");
    return smooth_l1((pred.y_start - gt.y_start) / image_height) + smooth_l1((pred.y_end - gt.y_end) / image_height);
}

std::vector<SegmentParam> segment_params(const LaneGrid& lane, std::size_t segments, const Pole& pole) {
    if (segments == 0) throw InvalidInput("segment count must be positive");
    const std::size_t n = lane.valid_rows();
    if (n < segments + 1)
        throw TooFewRows("lane has " + std::to_string(n) + " rows, " + std::to_string(segments) + " segments need " +
                         std::to_string(segments + 1));
    std::vector<SegmentParam> out;
    out.reserve(segments);
    const auto boundary = [&](std::size_t m) { return lane.first + (m * (n - 1)) / segments; };
    for (std::size_t m = 0; m < segments; ++m) {
        const std::size_t r0 = boundary(m);
        const std::size_t r1 = boundary(m + 1);
        const Point a = to_cartesian({lane.xs[r1], lane.frame.row_y(r1)}, lane.frame);
        const Point b = to_cartesian({lane.xs[r0], lane.frame.row_y(r0)}, lane.frame);
        const PolarAnchor chord = anchor_through(a, b, pole);
        out.push_back({chord.theta, chord.radius});
    }
    return out;
}

double aux_loss(const PolarAnchor& anchor, std::span<const SegmentOffset> offsets,
                std::span<const SegmentParam> gt_segments, double image_height) {
    if (offsets.size() != gt_segments.size()) throw ShapeError("offset and segment counts differ");
    if (!(image_height > 0.0)) throw InvalidInput("image height must be positive");
    if (offsets.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t m = 0; m < offsets.size(); ++m) {
        sum += smooth_l1(anchor.theta + offsets[m].d_theta - gt_segments[m].theta);
        sum += smooth_l1((anchor.radius + offsets[m].d_radius - gt_segments[m].radius) / image_height);
    }
    return sum / static_cast<double>(offsets.size());
}

GpmLoss gpm_losses(const LossComponents& c, const LossWeights& w) {
    GpmLoss out;
    out.cls = w.w_cls_o2m * c.cls_o2m + w.w_cls_o2o * c.cls_o2o + w.w_rank * c.rank;
    out.reg = w.w_giou_o2m * c.giou_o2m + w.w_end_o2m * c.end_o2m + w.w_aux * c.aux;
    out.total = c.lpm_cls + c.lpm_reg + out.cls + out.reg;
    return out;
}

}  // namespace polarkit
