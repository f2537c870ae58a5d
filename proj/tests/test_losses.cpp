#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polarkit/errors.hpp"
#include "polarkit/losses.hpp"

using namespace polarkit;

namespace {

LaneGrid vertical(double x) {
    const ImageFrame f;
    return make_lane(std::vector<double>(f.n_rows, x), 0, f.n_rows - 1, f);
}

PoleGridLabels labels_of(std::vector<double> r, std::vector<double> t, std::vector<unsigned char> s) {
    PoleGridLabels l;
    l.grid_rows = 1;
    l.grid_cols = r.size();
    l.r_hat = std::move(r);
    l.theta_hat = std::move(t);
    l.s_hat = std::move(s);
    return l;
}

}  // namespace

TEST(ScalarLosses, Values) {
    EXPECT_EQ(smooth_l1(0.0), 0.0);
    EXPECT_DOUBLE_EQ(smooth_l1(0.5), 0.125);
    EXPECT_DOUBLE_EQ(smooth_l1(-3.0), 2.5);
    EXPECT_NEAR(bce(0.5, 1.0), std::numbers::ln2, 1e-15);
    EXPECT_EQ(bce(1.0, 1.0), 0.0);
    EXPECT_EQ(bce(0.0, 0.0), 0.0);
    EXPECT_EQ(focal(1.0, 1.0), 0.0);
    EXPECT_EQ(focal(0.0, 0.0), 0.0);
    EXPECT_LT(focal(0.999, 1.0), 1e-7);
    EXPECT_TRUE(std::isfinite(bce(0.0, 1.0)));
}

TEST(LpmLoss, Examples) {
    const auto labels = labels_of({3.0, 50.0}, {0.2, 0.0}, {1, 0});
    const std::vector<PolePrediction> perfect{{0.2, 3.0, 1.0}, {1.0, 9.0, 0.0}};
    const auto z = lpm_loss(perfect, labels, 10.0);
    EXPECT_EQ(z.cls, 0.0);
    EXPECT_EQ(z.reg, 0.0);

    const std::vector<PolePrediction> off{{0.7, 3.0, 1.0}, {1.0, 9.0, 0.0}};
    EXPECT_DOUBLE_EQ(lpm_loss(off, labels, 10.0).reg, 0.125);

    const auto none = labels_of({50.0, 60.0}, {0.0, 0.0}, {0, 0});
    EXPECT_EQ(lpm_loss(off, none, 10.0).reg, 0.0);

    const std::vector<PolePrediction> short_pred{{0.0, 0.0, 0.5}};
    EXPECT_THROW(lpm_loss(short_pred, labels, 10.0), ShapeError);
}

TEST(LpmLoss, DirectSumOracle) {
    Rng rng(31);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.below(40);
        PoleGridLabels l = labels_of(std::vector<double>(n), std::vector<double>(n), std::vector<unsigned char>(n));
        std::vector<PolePrediction> p(n);
        const double lambda = 20.0;
        for (std::size_t j = 0; j < n; ++j) {
            l.r_hat[j] = rng.uniform(0, 40);
            l.theta_hat[j] = rng.uniform(-3, 3);
            l.s_hat[j] = l.r_hat[j] < lambda;
            p[j] = {rng.uniform(-3, 3), rng.uniform(0, 40), rng.uniform(0.01, 0.99)};
        }
        double cls = 0.0, reg = 0.0;
        std::size_t npos = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double y = l.s_hat[j];
            cls += -(y * std::log(p[j].score) + (1 - y) * std::log(1 - p[j].score));
            if (l.r_hat[j] < lambda) {
                ++npos;
                const double dt = std::abs(p[j].theta - l.theta_hat[j]);
                const double dr = std::abs(p[j].radius - l.r_hat[j]);
                reg += (dt < 1 ? 0.5 * dt * dt : dt - 0.5) + (dr < 1 ? 0.5 * dr * dr : dr - 0.5);
            }
        }
        const auto got = lpm_loss(p, l, lambda);
        EXPECT_NEAR(got.cls, cls / static_cast<double>(n), 1e-12);
        EXPECT_NEAR(got.reg, npos ? reg / static_cast<double>(npos) : 0.0, 1e-12);
        EXPECT_NEAR(lpm_loss(p, l, lambda, false).cls, cls, 1e-12);
    }
}

TEST(RankLoss, Examples) {
    const std::vector<double> pos{0.9, 0.8}, neg{0.1, 0.3};
    EXPECT_EQ(rank_loss(pos, neg), 0.0);
    const std::vector<double> half{0.5};
    EXPECT_DOUBLE_EQ(rank_loss(half, half, 0.2), 0.2);
    EXPECT_EQ(rank_loss(pos, {}), 0.0);
}

TEST(GIoULoss, Examples) {
    EXPECT_EQ(giou_loss(vertical(100), vertical(100), 15.0), 0.0);
    EXPECT_GT(giou_loss(vertical(100), vertical(400), 15.0), 1.0);
    double prev = 3.0;
    for (double x = 400; x >= 100; x -= 10) {
        const double v = giou_loss(vertical(x), vertical(100), 15.0);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(EndpointLoss, Examples) {
    EXPECT_EQ(endpoint_loss({10, 300}, {10, 300}, 320), 0.0);
    EXPECT_DOUBLE_EQ(endpoint_loss({0, 0}, {320, 320}, 320), 1.0);
    EXPECT_EQ(endpoint_loss({30, 200}, {10, 300}, 320), endpoint_loss({10, 300}, {30, 200}, 320));
    EXPECT_THROW(endpoint_loss({}, {}, 0.0), InvalidInput);
}

TEST(SegmentParams, StraightLane) {
    const ImageFrame f;
    std::vector<double> xs(f.n_rows);
    for (std::size_t i = 0; i < f.n_rows; ++i) xs[i] = 300 + 0.7 * f.row_y(i);
    const auto lane = make_lane(xs, 0, f.n_rows - 1, f);
    const Pole pole = default_global_pole(f);
    const auto segs = segment_params(lane, 4, pole);
    ASSERT_EQ(segs.size(), 4u);
    for (const auto& s : segs) {
        EXPECT_NEAR(s.theta, segs[0].theta, 1e-9);
        EXPECT_NEAR(s.radius, segs[0].radius, 1e-9);
    }
    const auto one = segment_params(lane, 1, pole);
    const auto chord = lane_chord_anchor(lane, pole);
    EXPECT_NEAR(one[0].theta, chord.theta, 1e-12);
    EXPECT_NEAR(one[0].radius, chord.radius, 1e-9);
}

TEST(SegmentParams, QuarterCircle) {
    const ImageFrame f;
    const double radius = 300.0;
    const Point centre{100.0, 0.0};  // Cartesian
    std::vector<double> xs(f.n_rows, 0.0);
    std::size_t first = f.n_rows;
    for (std::size_t i = 0; i < f.n_rows; ++i) {
        const double y = f.height - f.row_y(i) - centre.y;
        if (y > radius) continue;
        xs[i] = centre.x + std::sqrt(radius * radius - y * y);
        first = std::min(first, i);
    }
    const auto lane = make_lane(xs, first, f.n_rows - 1, f);
    const Pole pole = default_global_pole(f);
    const auto segs = segment_params(lane, 2, pole);
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_GT(std::abs(segs[0].theta - segs[1].theta), 0.1);

    const std::size_t n = lane.valid_rows();
    const std::size_t rows[3] = {first, first + (n - 1) / 2, f.n_rows - 1};
    for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t r : {rows[m], rows[m + 1]}) {
            const double y = f.height - f.row_y(r);
            const Point on_arc{centre.x + std::sqrt(radius * radius - (y - centre.y) * (y - centre.y)), y};
            EXPECT_NEAR(oracle::line_residual(segs[m].theta, segs[m].radius, pole.position, on_arc), 0.0, 1e-9);
        }
    }
    EXPECT_THROW(segment_params(make_lane(xs, 30, 33, f), 4, pole), TooFewRows);
}

TEST(AuxLoss, Examples) {
    const Pole pole{{400, 192}, PoleKind::global};
    const PolarAnchor anchor{0.1, 20.0, pole};
    const std::vector<SegmentParam> gt{{0.2, 25.0}, {0.05, 18.0}};
    const std::vector<SegmentOffset> exact{{0.1, 5.0}, {-0.05, -2.0}};
    EXPECT_NEAR(aux_loss(anchor, exact, gt, 320), 0.0, 1e-15);

    const std::vector<SegmentParam> straight{{0.1, 20.0}, {0.1, 20.0}, {0.1, 20.0}};
    const std::vector<SegmentOffset> zeros(3);
    EXPECT_EQ(aux_loss(anchor, zeros, straight, 320), 0.0);

    std::vector<SegmentOffset> off(3);
    off[1].d_theta = 0.5;
    EXPECT_DOUBLE_EQ(aux_loss(anchor, off, straight, 320), 0.125 / 3.0);
    EXPECT_THROW(aux_loss(anchor, exact, straight, 320), ShapeError);
}

TEST(GpmLosses, WeightedSums) {
    const LossComponents zero;
    EXPECT_EQ(gpm_losses(zero, {}).total, 0.0);

    LossWeights w{0, 0, 0.7, 0, 0, 0};
    LossComponents c;
    c.rank = 1.0;
    EXPECT_DOUBLE_EQ(gpm_losses(c, w).cls, 0.7);

    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
        LossComponents a{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(),
                         rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const LossWeights lw{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const auto g = gpm_losses(a, lw);
        EXPECT_DOUBLE_EQ(g.cls, lw.w_cls_o2m * a.cls_o2m + lw.w_cls_o2o * a.cls_o2o + lw.w_rank * a.rank);
        EXPECT_DOUBLE_EQ(g.reg, lw.w_giou_o2m * a.giou_o2m + lw.w_end_o2m * a.end_o2m + lw.w_aux * a.aux);
        EXPECT_DOUBLE_EQ(g.total, a.lpm_cls + a.lpm_reg + g.cls + g.reg);
    }
}
