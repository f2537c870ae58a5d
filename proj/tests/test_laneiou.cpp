#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polarkit/errors.hpp"
#include "polarkit/laneiou.hpp"

using namespace polarkit;

namespace {

LaneGrid vertical(double x, const ImageFrame& f = {}) { return make_lane(std::vector<double>(f.n_rows, x), 0, f.n_rows - 1, f); }

}  // namespace

TEST(Boundaries, VerticalLane) {
    const auto b = lane_boundaries(vertical(100), 15.0);
    for (std::size_t i = b.first; i <= b.last; ++i) {
        EXPECT_DOUBLE_EQ(b.semi_widths[i], 15.0);
        EXPECT_DOUBLE_EQ(b.left[i], 85.0);
        EXPECT_DOUBLE_EQ(b.right[i], 115.0);
    }
}

TEST(Boundaries, FortyFiveDegreeLane) {
    const ImageFrame f;
    std::vector<double> xs(f.n_rows);
    for (std::size_t i = 0; i < f.n_rows; ++i) xs[i] = 100.0 + f.row_y(i);
    const auto b = lane_boundaries(make_lane(xs, 0, f.n_rows - 1, f), 15.0);
    for (std::size_t i = 0; i < f.n_rows; ++i) EXPECT_NEAR(b.semi_widths[i], std::sqrt(2.0) * 15.0, 1e-12);
}

TEST(Boundaries, SingleRowRejected) {
    const ImageFrame f;
    const auto lane = make_lane(std::vector<double>(f.n_rows, 5.0), 3, 3, f);
    EXPECT_THROW(lane_boundaries(lane, 15.0), InvalidLane);
    EXPECT_THROW(glane_iou(lane, lane, {}), InvalidLane);
    EXPECT_THROW(lane_boundaries(vertical(1), 0.0), InvalidInput);
}

TEST(GLaneIoU, WorkedExamples) {
    EXPECT_EQ(glane_iou(vertical(100), vertical(100), {}), 1.0);
    EXPECT_EQ(glane_iou(vertical(100), vertical(400), {}), 0.0);
    EXPECT_DOUBLE_EQ(glane_iou(vertical(100), vertical(110), {}), 0.5);
}

TEST(GLaneIoU, GapPenalty) {
    // Per row: overlap 0, gap 270, union 330.
    EXPECT_NEAR(glane_iou(vertical(100), vertical(400), {1.0, 15.0}), -270.0 / 330.0, 1e-12);
}

TEST(GLaneIoU, DisjointRowRanges) {
    const ImageFrame f;
    const auto a = make_lane(std::vector<double>(f.n_rows, 100.0), 0, 10, f);
    const auto b = make_lane(std::vector<double>(f.n_rows, 100.0), 20, 30, f);
    EXPECT_EQ(glane_iou(a, b, {}), 0.0);
    EXPECT_EQ(glane_iou(a, b, {1.0, 15.0}), 0.0);
}

TEST(GLaneIoU, LengthMismatchCountsInUnion) {
    const ImageFrame f;
    const auto full = vertical(100);
    const auto half = make_lane(std::vector<double>(f.n_rows, 100.0), 18, 35, f);
    EXPECT_DOUBLE_EQ(glane_iou(full, half, {}), 0.5);
}

TEST(GLaneIoU, FrameMismatch) {
    EXPECT_THROW(glane_iou(vertical(1), vertical(1, {800, 320, 72}), {}), InvalidInput);
}

TEST(GLaneIoU, BoxConsistencyForVerticals) {
    for (double dx : {0.0, 3.0, 10.0, 29.0, 30.0, 45.0}) {
        const double inter = std::max(30.0 - dx, 0.0);
        const double hull = 30.0 + dx;
        EXPECT_NEAR(glane_iou(vertical(200), vertical(200 + dx), {}), inter / hull, 1e-12);
    }
}

TEST(GLaneIoU, MonotoneUnderTranslation) {
    double prev = 2.0;
    for (double dx = 0.0; dx <= 60.0; dx += 2.5) {
        const double v = glane_iou(vertical(300), vertical(300 + dx), {});
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(GLaneIoU, OracleSymmetryBounds) {
    const ImageFrame f;
    Rng rng(5);
    for (int t = 0; t < 300; ++t) {
        const auto a = oracle::random_lane(rng, f);
        const auto b = t % 2 ? oracle::jittered(rng, a, rng.uniform(-30, 30), 5.0) : oracle::random_lane(rng, f);
        const double v = glane_iou(a, b, {});
        EXPECT_NEAR(v, oracle::lane_iou_g0(a, b, 15.0), 1e-9);
        EXPECT_EQ(v, glane_iou(b, a, {}));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        const double g1 = glane_iou(a, b, {1.0, 15.0});
        EXPECT_NEAR(g1, glane_iou(b, a, {1.0, 15.0}), 1e-15);
        EXPECT_GT(g1, -1.0);
        EXPECT_EQ(glane_iou(lane_boundaries(a, 15.0), lane_boundaries(b, 15.0), 0.0), v);
    }
}

TEST(IoUMatrix, Shapes) {
    const std::vector<LaneGrid> a{vertical(100), vertical(110)};
    const auto m = iou_matrix(a, a, {});
    ASSERT_EQ(m.rows(), 2u);
    EXPECT_EQ(m(0, 0), 1.0);
    EXPECT_EQ(m(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(m(1, 0), 0.5);
    const auto empty = iou_matrix(a, {}, {});
    EXPECT_EQ(empty.rows(), 0u);
    EXPECT_EQ(empty.cols(), 2u);
}

TEST(IoUMatrix, Orientation) {
    const std::vector<LaneGrid> a{vertical(100), vertical(200), vertical(300)};
    const std::vector<LaneGrid> b{vertical(105)};
    const auto m = iou_matrix(a, b, {});
    ASSERT_EQ(m.rows(), 1u);
    ASSERT_EQ(m.cols(), 3u);
    EXPECT_GT(m(0, 0), 0.5);
    EXPECT_EQ(m(0, 1), 0.0);
}
