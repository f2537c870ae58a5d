#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace polarkit {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

/// Image size plus the number of equally spaced sample rows. Row i (0-based) sits at
/// image y = (i + 1) * height / n_rows, so the last row touches the bottom edge.
struct ImageFrame {
    double width = 800.0;
    double height = 320.0;
    std::size_t n_rows = 36;

    void validate() const;
    double row_step() const { return height / static_cast<double>(n_rows); }
    double row_y(std::size_t row) const { return static_cast<double>(row + 1) * row_step(); }

    bool operator==(const ImageFrame&) const = default;
};

// The one place image coordinates (y down) and the Cartesian frame (y up) meet.
Point to_cartesian(Point image_pt, const ImageFrame& frame);
Point to_image(Point cart_pt, const ImageFrame& frame);

/// A lane as x-coordinates on the frame's row grid. Rows outside [first, last]
/// (0-based, inclusive) hold NaN.
struct LaneGrid {
    std::vector<double> xs;
    std::size_t first = 0;
    std::size_t last = 0;
    ImageFrame frame;

    std::size_t valid_rows() const { return last - first + 1; }
    bool is_valid(std::size_t row) const { return row >= first && row <= last; }
    /// Valid grid samples in image coordinates, top to bottom.
    std::vector<Point> points() const;

    bool operator==(const LaneGrid& other) const;
};

/// Resample an ordered polyline (image coordinates) onto the frame's row grid.
LaneGrid polyline_to_grid(std::span<const Point> points, const ImageFrame& frame);

/// Build a grid lane from explicit per-row xs; throws InvalidLane on a bad range.
LaneGrid make_lane(std::vector<double> xs, std::size_t first, std::size_t last, const ImageFrame& frame);

enum class PoleKind { local, global };

/// Pole positions are stored in the Cartesian frame.
struct Pole {
    Point position;
    PoleKind kind = PoleKind::global;
};

inline constexpr double kAngleEpsilon = 1e-6;

/// Line {p : [cos t, sin t] . (p - pole) = radius}, angle against the +x axis.
struct PolarAnchor {
    double theta = 0.0;
    double radius = 0.0;
    Pole pole;
};

/// Default global pole at (W/2, 0.4 H) in image coordinates.
Pole default_global_pole(const ImageFrame& frame);

/// Local poles at the cell centres of a rows x cols partition of the image, row-major
/// from the top-left cell.
std::vector<Pole> local_pole_lattice(const ImageFrame& frame, std::size_t rows, std::size_t cols);

/// Re-express a local-pole anchor against the global pole. The angle is unchanged.
PolarAnchor local_to_global_radius(const PolarAnchor& anchor, const Pole& global_pole);

/// x-coordinates of the anchor line at every grid row.
std::vector<double> sample_anchor_xs(const PolarAnchor& anchor, const ImageFrame& frame);

/// Polar form of the line through two Cartesian points, angle folded into (-pi/2, pi/2].
PolarAnchor anchor_through(Point a, Point b, const Pole& pole);

/// Chord through the first and last valid samples of a lane, against `pole`.
PolarAnchor lane_chord_anchor(const LaneGrid& lane, const Pole& pole);

struct LpmConfig {
    std::size_t grid_rows = 4;
    std::size_t grid_cols = 10;
    double lambda_l = 0.0;  // required; no default value is blessed
    std::size_t top_k = 20;

    void validate() const;
};

/// Per-pole regression and classification targets, row-major over the pole lattice.
struct PoleGridLabels {
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    std::vector<double> r_hat;
    std::vector<double> theta_hat;
    std::vector<unsigned char> s_hat;

    std::size_t size() const { return r_hat.size(); }
};

inline constexpr double kNoLaneRadius = std::numeric_limits<double>::infinity();

PoleGridLabels lpm_labels(std::span<const LaneGrid> gt_lanes, std::span<const Pole> poles, const LpmConfig& cfg);

/// Indices of the k largest scores, descending; equal scores keep index order.
std::vector<std::size_t> top_k_select(std::span<const double> scores, std::size_t k);

double point_segment_distance(Point p, Point a, Point b, Point* nearest = nullptr);

}  // namespace polarkit
