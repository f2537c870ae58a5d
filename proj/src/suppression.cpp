#include "polarkit/suppression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "polarkit/errors.hpp"
#include "polarkit/laneiou.hpp"

namespace polarkit {

LaneDistance iou_distance(double w_base) {
    const GIoUParams params{0.0, w_base};
    return [params](const LaneGrid& a, const LaneGrid& b) { return 1.0 - glane_iou(a, b, params); };
}

BinaryMatrix confidence_adjacency(std::span<const double> scores) {
    const std::size_t k = scores.size();
    BinaryMatrix a(k, k, 0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (i != j && (scores[i] > scores[j] || (scores[i] == scores[j] && i > j))) a(i, j) = 1;
    return a;
}

BinaryMatrix geometric_adjacency(std::span<const PolarAnchor> anchors, const SuppressionThresholds& th) {
    const std::size_t k = anchors.size();
    BinaryMatrix a(k, k, 0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (std::abs(anchors[i].theta - anchors[j].theta) < th.tau_theta &&
                std::abs(anchors[i].radius - anchors[j].radius) < th.lambda_g)
                a(i, j) = 1;
    return a;
}

BinaryMatrix elementwise_and(const BinaryMatrix& a, const BinaryMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("adjacency shapes differ");
    BinaryMatrix out(a.rows(), a.cols(), 0);
    for (std::size_t i = 0; i < a.data().size(); ++i) out.data()[i] = a.data()[i] & b.data()[i];
    return out;
}

std::vector<unsigned char> fast_nms_survivors(std::span<const LaneGrid> lanes, const BinaryMatrix& adjacency,
                                              double tau_d, const LaneDistance& distance) {
    const std::size_t k = lanes.size();
    if (adjacency.rows() != k || adjacency.cols() != k) throw ShapeError("adjacency does not match candidate count");
    const double inv_threshold = 1.0 / tau_d;
    std::vector<unsigned char> keep(k, 1);
    for (std::size_t j = 0; j < k; ++j) {
        double max_inv = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!adjacency(i, j)) continue;
            const double d = distance(lanes[i], lanes[j]);
            const double inv = d > 0.0 ? 1.0 / d : std::numeric_limits<double>::infinity();
            max_inv = std::max(max_inv, inv);
        }
        keep[j] = max_inv < inv_threshold ? 1 : 0;
    }
    return keep;
}

std::vector<std::size_t> fast_nms_with_prior(const CandidateSet& candidates, const BinaryMatrix& geometric,
                                             const SuppressionThresholds& th, const LaneDistance& distance) {
    const auto scores = o2m_scores(candidates);
    const auto lanes = lanes_of(candidates);
    const BinaryMatrix adjacency = elementwise_and(confidence_adjacency(scores), geometric);
    const auto keep = fast_nms_survivors(lanes, adjacency, th.tau_d, distance);
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (keep[i] && scores[i] > th.tau_o2m) selected.push_back(i);
    return selected;
}

std::vector<std::size_t> fast_nms_geometric(const CandidateSet& candidates, const SuppressionThresholds& th,
                                            const LaneDistance& distance) {
    const auto anchors = anchors_of(candidates);
    return fast_nms_with_prior(candidates, geometric_adjacency(anchors, th), th, distance);
}

std::vector<std::size_t> sequential_nms(const CandidateSet& candidates, const LaneDistance& distance, double tau_d,
                                        double tau_o2m) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].score_o2m > tau_o2m) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = candidates[a].score_o2m;
        const double sb = candidates[b].score_o2m;
        return sa != sb ? sa > sb : a > b;
    });

    std::vector<unsigned char> removed(order.size(), 0);
    std::vector<std::size_t> kept;
    for (std::size_t u = 0; u < order.size(); ++u) {
        if (removed[u]) continue;
        kept.push_back(order[u]);
        for (std::size_t v = u + 1; v < order.size(); ++v)
            if (!removed[v] && distance(candidates[order[u]].lane, candidates[order[v]].lane) < tau_d) removed[v] = 1;
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<std::size_t> dual_confidence_select(const CandidateSet& candidates, double tau_o2o, double tau_o2m) {
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!c.score_o2o) throw MissingO2OScores("candidate " + std::to_string(i) + " has no one-to-one score");
        if (*c.score_o2o > tau_o2o && c.score_o2m > tau_o2m) selected.push_back(i);
    }
    return selected;
}

std::vector<double> o2m_scores(const CandidateSet& candidates) {
    std::vector<double> s;
    s.reserve(candidates.size());
    for (const auto& c : candidates) s.push_back(c.score_o2m);
    return s;
}

std::vector<PolarAnchor> anchors_of(const CandidateSet& candidates) {
    std::vector<PolarAnchor> a;
    a.reserve(candidates.size());
    for (const auto& c : candidates) a.push_back(c.anchor);
    return a;
}

std::vector<LaneGrid> lanes_of(const CandidateSet& candidates) {
    std::vector<LaneGrid> l;
    l.reserve(candidates.size());
    for (const auto& c : candidates) l.push_back(c.lane);
    return l;
}

}  // namespace polarkit
