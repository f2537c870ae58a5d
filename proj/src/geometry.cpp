#include "polarkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "polarkit/errors.hpp"

namespace polarkit {

void ImageFrame::validate() const {
    if (!(width > 0.0) || !(height > 0.0))
        throw InvalidInput("frame width and height must be positive");
    if (n_rows < 2) throw InvalidInput("frame needs at least 2 rows");
}

Point to_cartesian(Point image_pt, const ImageFrame& frame) { return {image_pt.x, frame.height - image_pt.y}; }

Point to_image(Point cart_pt, const ImageFrame& frame) { return {cart_pt.x, frame.height - cart_pt.y}; }

std::vector<Point> LaneGrid::points() const {
    std::vector<Point> out;
    out.reserve(valid_rows());
    for (std::size_t i = first; i <= last; ++i) out.push_back({xs[i], frame.row_y(i)});
    return out;
}

bool LaneGrid::operator==(const LaneGrid& other) const {
    if (first != other.first || last != other.last || !(frame == other.frame) || xs.size() != other.xs.size())
        return false;
    for (std::size_t i = first; i <= last; ++i)
        if (xs[i] != other.xs[i]) return false;
    return true;
}

LaneGrid make_lane(std::vector<double> xs, std::size_t first, std::size_t last, const ImageFrame& frame) {
    if (xs.size() != frame.n_rows) throw InvalidLane("lane has " + std::to_string(xs.size()) + " rows, frame has " +
                                                     std::to_string(frame.n_rows));
    if (first > last || last >= frame.n_rows) throw InvalidLane("lane valid range is empty or out of the frame");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i < first || i > last)
            xs[i] = std::numeric_limits<double>::quiet_NaN();
        else if (!std::isfinite(xs[i]))
            throw InvalidLane("non-finite x at row " + std::to_string(i));
    }
    return LaneGrid{std::move(xs), first, last, frame};
}

LaneGrid polyline_to_grid(std::span<const Point> points, const ImageFrame& frame) {
    frame.validate();
    if (points.size() < 2) throw InvalidLane("polyline needs at least 2 points");
    std::vector<Point> pts(points.begin(), points.end());
    std::stable_sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.y < b.y; });
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].y > pts[i - 1].y)) throw InvalidLane("polyline y is not strictly monotonic");
    for (const auto& p : pts)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidLane("polyline has a non-finite point");

    const double y_lo = pts.front().y;
    const double y_hi = pts.back().y;
    if (y_hi - y_lo < frame.row_step()) throw InvalidLane("polyline spans less than one grid step");

    std::vector<double> xs(frame.n_rows, std::numeric_limits<double>::quiet_NaN());
    std::size_t first = frame.n_rows;
    std::size_t last = 0;
    std::size_t seg = 0;
    for (std::size_t row = 0; row < frame.n_rows; ++row) {
        const double y = frame.row_y(row);
        if (y < y_lo || y > y_hi) continue;
        while (seg + 2 < pts.size() && pts[seg + 1].y < y) ++seg;
        const Point& a = pts[seg];
        const Point& b = pts[seg + 1];
        const double t = (y - a.y) / (b.y - a.y);
        xs[row] = a.x + t * (b.x - a.x);
        first = std::min(first, row);
        last = std::max(last, row);
    }
    if (first > last) throw InvalidLane("polyline covers no grid row");
    return LaneGrid{std::move(xs), first, last, frame};
}

Pole default_global_pole(const ImageFrame& frame) {
    return Pole{to_cartesian({frame.width / 2.0, 0.4 * frame.height}, frame), PoleKind::global};
}

std::vector<Pole> local_pole_lattice(const ImageFrame& frame, std::size_t rows, std::size_t cols) {
    std::vector<Pole> poles;
    poles.reserve(rows * cols);
    const double cell_h = frame.height / static_cast<double>(rows);
    const double cell_w = frame.width / static_cast<double>(cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const Point img{(static_cast<double>(c) + 0.5) * cell_w, (static_cast<double>(r) + 0.5) * cell_h};
            poles.push_back({to_cartesian(img, frame), PoleKind::local});
        }
    return poles;
}

PolarAnchor local_to_global_radius(const PolarAnchor& anchor, const Pole& global_pole) {
    const double c = std::cos(anchor.theta);
    const double s = std::sin(anchor.theta);
    const Point& cl = anchor.pole.position;
    const Point& cg = global_pole.position;
    return {anchor.theta, anchor.radius + c * (cl.x - cg.x) + s * (cl.y - cg.y), global_pole};
}

std::vector<double> sample_anchor_xs(const PolarAnchor& anchor, const ImageFrame& frame) {
    const double c = std::cos(anchor.theta);
    if (std::abs(c) <= kAngleEpsilon) throw NearHorizontalAnchor("anchor is too close to horizontal to sample");
    const double s = std::sin(anchor.theta);
    const Point& cg = anchor.pole.position;
    const double offset = (anchor.radius + c * cg.x + s * cg.y) / c;
    const double tan_t = s / c;
    std::vector<double> xs(frame.n_rows);
    for (std::size_t i = 0; i < frame.n_rows; ++i) {
        const double y = frame.height - frame.row_y(i);
        xs[i] = -y * tan_t + offset;
    }
    return xs;
}

PolarAnchor anchor_through(Point a, Point b, const Pole& pole) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    if (!(len > 0.0)) throw InvalidInput("anchor points coincide");
    double nx = -dy / len;
    double ny = dx / len;
    if (nx < 0.0 || (nx == 0.0 && ny < 0.0)) {
        nx = -nx;
        ny = -ny;
    }
    const double theta = std::atan2(ny, nx);
    const double radius = nx * (a.x - pole.position.x) + ny * (a.y - pole.position.y);
    return {theta, radius, pole};
}

PolarAnchor lane_chord_anchor(const LaneGrid& lane, const Pole& pole) {
    const Point top = to_cartesian({lane.xs[lane.first], lane.frame.row_y(lane.first)}, lane.frame);
    const Point bottom = to_cartesian({lane.xs[lane.last], lane.frame.row_y(lane.last)}, lane.frame);
    return anchor_through(bottom, top, pole);
}

void LpmConfig::validate() const {
    if (grid_rows == 0 || grid_cols == 0) throw InvalidInput("pole grid must be non-empty");
    if (!(lambda_l > 0.0)) throw InvalidInput("lambda_l must be positive");
    if (top_k > grid_rows * grid_cols) throw InvalidK("top_k exceeds the number of poles");
}

double point_segment_distance(Point p, Point a, Point b, Point* nearest) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    const Point q{a.x + t * dx, a.y + t * dy};
    if (nearest) *nearest = q;
    return std::hypot(p.x - q.x, p.y - q.y);
}

PoleGridLabels lpm_labels(std::span<const LaneGrid> gt_lanes, std::span<const Pole> poles, const LpmConfig& cfg) {
    cfg.validate();
    if (poles.size() != cfg.grid_rows * cfg.grid_cols)
        throw ShapeError("pole count does not match the configured grid");

    PoleGridLabels labels;
    labels.grid_rows = cfg.grid_rows;
    labels.grid_cols = cfg.grid_cols;
    labels.r_hat.assign(poles.size(), kNoLaneRadius);
    labels.theta_hat.assign(poles.size(), 0.0);
    labels.s_hat.assign(poles.size(), 0);

    std::vector<std::vector<Point>> curves;
    curves.reserve(gt_lanes.size());
    for (const auto& lane : gt_lanes) {
        std::vector<Point> cart;
        for (const auto& p : lane.points()) cart.push_back(to_cartesian(p, lane.frame));
        curves.push_back(std::move(cart));
    }

    for (std::size_t j = 0; j < poles.size(); ++j) {
        const Point c = poles[j].position;
        double best = kNoLaneRadius;
        Point best_pt{};
        Point best_a{}, best_b{};
        // Strict improvement keeps the earliest lane (and segment) on ties.
        for (const auto& curve : curves) {
            for (std::size_t s = 0; s + 1 < curve.size(); ++s) {
                Point q;
                const double d = point_segment_distance(c, curve[s], curve[s + 1], &q);
                if (d < best) {
                    best = d;
                    best_pt = q;
                    best_a = curve[s];
                    best_b = curve[s + 1];
                }
            }
        }
        if (!std::isfinite(best)) continue;
        labels.r_hat[j] = best;
        if (best > 0.0) {
            labels.theta_hat[j] = std::atan2(best_pt.y - c.y, best_pt.x - c.x);
        } else {
            // Pole on the curve: fall back to the segment normal.
            labels.theta_hat[j] = anchor_through(best_a, best_b, poles[j]).theta;
        }
        labels.s_hat[j] = best < cfg.lambda_l ? 1 : 0;
    }
    return labels;
}

std::vector<std::size_t> top_k_select(std::span<const double> scores, std::size_t k) {
    if (k > scores.size()) throw InvalidK("K=" + std::to_string(k) + " exceeds " + std::to_string(scores.size()));
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(k);
    return idx;
}

}  // namespace polarkit
