#pragma once

#include <span>
#include <vector>

#include "polarkit/geometry.hpp"
#include "polarkit/matrix.hpp"

namespace polarkit {

/// Slope-adapted lane band. Arrays are indexed by grid row; entries outside
/// [first, last] are NaN.
struct LaneBoundaries {
    std::vector<double> left;
    std::vector<double> right;
    std::vector<double> semi_widths;
    std::size_t first = 0;
    std::size_t last = 0;
};

struct GIoUParams {
    double g = 0.0;
    double w_base = 15.0;
};

/// Semi-width per row is w_base scaled by the local arc-length factor sqrt(dx^2 + dy^2) / dy,
/// with central differences inside the valid range and one-sided ones at its ends.
LaneBoundaries lane_boundaries(const LaneGrid& lane, double w_base);

/// Interval IoU summed over the union of both lanes' valid rows, minus g times the gap
/// ratio. Rows covered by only one lane add that lane's band width to the union.
double glane_iou(const LaneGrid& p, const LaneGrid& q, const GIoUParams& params);

/// Same as glane_iou with the bands computed up front.
double glane_iou(const LaneBoundaries& p, const LaneBoundaries& q, double g);

/// Element (q, p) = glane_iou(set_a[p], set_b[q]); shape |set_b| x |set_a|.
MatrixD iou_matrix(std::span<const LaneGrid> set_a, std::span<const LaneGrid> set_b, const GIoUParams& params);

}  // namespace polarkit
