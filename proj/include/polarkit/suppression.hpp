#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "polarkit/geometry.hpp"
#include "polarkit/matrix.hpp"

namespace polarkit {

struct Candidate {
    PolarAnchor anchor;      // global-pole anchor
    LaneGrid lane;           // anchor xs plus regressed offsets
    double score_o2m = 0.0;
    std::optional<double> score_o2o;
};

using CandidateSet = std::vector<Candidate>;

struct SuppressionThresholds {
    double tau_theta = 0.1;   // radians
    double lambda_g = 30.0;   // pixels
    double tau_d = 0.5;       // distance threshold, in the units of the distance function
    double tau_o2m = 0.48;
    double tau_o2o = 0.46;
};

using LaneDistance = std::function<double(const LaneGrid&, const LaneGrid&)>;

/// d = 1 - GLaneIoU(g = 0) with the given base semi-width. The semi-width is the knob
/// that maps the pixel-valued NMS presets onto an IoU distance.
LaneDistance iou_distance(double w_base);

/// A[i][j] = 1 when candidate i outranks j: higher score, or equal score and larger index.
BinaryMatrix confidence_adjacency(std::span<const double> scores);

/// A[i][j] = 1 when |dtheta| < tau_theta and |dr| < lambda_g (strict).
BinaryMatrix geometric_adjacency(std::span<const PolarAnchor> anchors, const SuppressionThresholds& th);

BinaryMatrix elementwise_and(const BinaryMatrix& a, const BinaryMatrix& b);

/// Matrix test over an explicit adjacency: j survives iff the largest inverse distance
/// from any in-neighbour is below 1 / tau_d. No in-neighbours means it survives.
std::vector<unsigned char> fast_nms_survivors(std::span<const LaneGrid> lanes, const BinaryMatrix& adjacency,
                                              double tau_d, const LaneDistance& distance);

/// Sort-free Fast NMS with the geometric prior. Returns selected indices, ascending.
std::vector<std::size_t> fast_nms_geometric(const CandidateSet& candidates, const SuppressionThresholds& th,
                                            const LaneDistance& distance);

/// Same test with a caller-supplied geometric adjacency (e.g. all ones).
std::vector<std::size_t> fast_nms_with_prior(const CandidateSet& candidates, const BinaryMatrix& geometric,
                                             const SuppressionThresholds& th, const LaneDistance& distance);

/// Greedy NMS baseline: visit by descending score (same tie order as the confidence
/// adjacency) and drop anything within tau_d of a kept lane. Returns indices ascending.
std::vector<std::size_t> sequential_nms(const CandidateSet& candidates, const LaneDistance& distance, double tau_d,
                                        double tau_o2m);

/// {i : o2o_i > tau_o2o} intersected with {i : o2m_i > tau_o2m}.
std::vector<std::size_t> dual_confidence_select(const CandidateSet& candidates, double tau_o2o, double tau_o2m);

std::vector<double> o2m_scores(const CandidateSet& candidates);
std::vector<PolarAnchor> anchors_of(const CandidateSet& candidates);
std::vector<LaneGrid> lanes_of(const CandidateSet& candidates);

}  // namespace polarkit
