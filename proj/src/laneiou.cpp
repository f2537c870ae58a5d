#include "polarkit/laneiou.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polarkit/errors.hpp"

namespace polarkit {

namespace {

double semi_width(const LaneGrid& lane, std::size_t i, double w_base) {
    const std::size_t lo = i == lane.first ? i : i - 1;
    const std::size_t hi = i == lane.last ? i : i + 1;
    const double dx = lane.xs[hi] - lane.xs[lo];
    const double dy = lane.frame.row_y(hi) - lane.frame.row_y(lo);
    return std::hypot(dx, dy) / dy * w_base;
}

void check_lane(const LaneGrid& lane, double w_base) {
    if (!(w_base > 0.0)) throw InvalidInput("base semi-width must be positive");
    if (lane.last <= lane.first) throw InvalidLane("lane needs at least 2 valid rows for boundary widths");
}

}  // namespace

LaneBoundaries lane_boundaries(const LaneGrid& lane, double w_base) {
    check_lane(lane, w_base);
    const std::size_t n = lane.xs.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    LaneBoundaries b{std::vector<double>(n, nan), std::vector<double>(n, nan), std::vector<double>(n, nan),
                     lane.first, lane.last};
    for (std::size_t i = lane.first; i <= lane.last; ++i) {
        const double w = semi_width(lane, i, w_base);
        b.semi_widths[i] = w;
        b.left[i] = lane.xs[i] - w;
        b.right[i] = lane.xs[i] + w;
    }
    return b;
}

double glane_iou(const LaneBoundaries& p, const LaneBoundaries& q, double g) {
    const std::size_t lo = std::min(p.first, q.first);
    const std::size_t hi = std::max(p.last, q.last);
    double overlap = 0.0;
    double gap = 0.0;
    double uni = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const bool in_p = i >= p.first && i <= p.last;
        const bool in_q = i >= q.first && i <= q.last;
        if (in_p && in_q) {
            const double inner_r = std::min(p.right[i], q.right[i]);
            const double inner_l = std::max(p.left[i], q.left[i]);
            overlap += std::max(inner_r - inner_l, 0.0);
            gap += std::max(inner_l - inner_r, 0.0);
            uni += std::max(p.right[i], q.right[i]) - std::min(p.left[i], q.left[i]);
        } else if (in_p) {
            uni += 2.0 * p.semi_widths[i];
        } else if (in_q) {
            uni += 2.0 * q.semi_widths[i];
        }
    }
    if (!(uni > 0.0)) return 0.0;
    return overlap / uni - g * gap / uni;
}

double glane_iou(const LaneGrid& p, const LaneGrid& q, const GIoUParams& params) {
    if (!(p.frame == q.frame)) throw InvalidInput("lanes must share a frame before computing IoU");
    check_lane(p, params.w_base);
    check_lane(q, params.w_base);
    // Allocation-free twin of the LaneBoundaries overload; both must accumulate identically.
    const std::size_t lo = std::min(p.first, q.first);
    const std::size_t hi = std::max(p.last, q.last);
    double overlap = 0.0;
    double gap = 0.0;
    double uni = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const bool in_p = p.is_valid(i);
        const bool in_q = q.is_valid(i);
        if (in_p && in_q) {
            const double wp = semi_width(p, i, params.w_base);
            const double wq = semi_width(q, i, params.w_base);
            const double pl = p.xs[i] - wp, pr = p.xs[i] + wp;
            const double ql = q.xs[i] - wq, qr = q.xs[i] + wq;
            const double inner_r = std::min(pr, qr);
            const double inner_l = std::max(pl, ql);
            overlap += std::max(inner_r - inner_l, 0.0);
            gap += std::max(inner_l - inner_r, 0.0);
            uni += std::max(pr, qr) - std::min(pl, ql);
        } else if (in_p) {
            uni += 2.0 * semi_width(p, i, params.w_base);
        } else if (in_q) {
            uni += 2.0 * semi_width(q, i, params.w_base);
        }
    }
    if (!(uni > 0.0)) return 0.0;
    return overlap / uni - params.g * gap / uni;
}

MatrixD iou_matrix(std::span<const LaneGrid> set_a, std::span<const LaneGrid> set_b, const GIoUParams& params) {
    std::vector<LaneBoundaries> ba;
    std::vector<LaneBoundaries> bb;
    ba.reserve(set_a.size());
    bb.reserve(set_b.size());
    for (const auto& l : set_a) ba.push_back(lane_boundaries(l, params.w_base));
    for (const auto& l : set_b) bb.push_back(lane_boundaries(l, params.w_base));
    MatrixD m(set_b.size(), set_a.size());
    for (std::size_t q = 0; q < bb.size(); ++q)
        for (std::size_t p = 0; p < ba.size(); ++p) m(q, p) = glane_iou(ba[p], bb[q], params.g);
    return m;
}

}  // namespace polarkit
